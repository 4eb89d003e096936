"""medirelay: telemedicine record management.

Per-visit medical records (SOAP-structured information packages), a three-tier
store with time-windowed archive volumes, store-and-forward synchronization
between a rural site and a medical center, and the registration/booking portal
that sits on top.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Attachment,
    Kind,
    Pip,
    StorageClass,
    VisitMode,
    classify_attribute,
    make_attachment,
    make_pip,
    patient_folder,
    pip_digest,
    problem_folder,
)
from .store import RetentionPolicy, StoredRecord, Tier, TierStore  # noqa: F401
from .sync import (  # noqa: F401
    ChannelSchedule,
    ChannelState,
    ConsultationEntry,
    SimChannel,
    SyncEngine,
    SyncStats,
    apply_remote,
    prefetch_set,
)
from .workflow import Portal, Role  # noqa: F401
from .service import ApplicationCore, ServiceConfig, load_config  # noqa: F401
