// The only file that touches the DOM: it routes on hashchange, renders the
// loaded screen into #root, and turns form submits into actions. Everything
// it displays comes from loadScreen, so a reload rebuilds any screen.

import type { Ctx } from "./controllers.js";
import { loadScreen, runAction } from "./controllers.js";
import { parseHash } from "./router.js";
import { hrefFor } from "./router.js";
import type { Transient } from "./views.js";

export class App {
  constructor(
    private readonly ctx: Ctx,
    private readonly root: HTMLElement,
  ) {}

  start(): void {
    window.addEventListener("hashchange", () => {
      void this.render();
    });
    this.root.addEventListener("submit", (event) => {
      const form = event.target;
      if (form instanceof HTMLFormElement && form.dataset.action) {
        event.preventDefault();
        void this.submit(form, event.submitter);
      }
    });
    void this.render();
  }

  async render(transient?: Transient): Promise<void> {
    const parsed = parseHash(window.location.hash);
    if (!parsed) {
      window.location.hash = hrefFor("login");
      return;
    }
    const result = await loadScreen(this.ctx, parsed, transient);
    if (result.kind === "redirect") {
      if (window.location.hash === result.hash) {
        await this.render();
      } else {
        window.location.hash = result.hash;
      }
      return;
    }
    this.root.innerHTML = result.html;
  }

  private async submit(
    form: HTMLFormElement,
    submitter: HTMLElement | null,
  ): Promise<void> {
    const fields: Record<string, string> = {};
    for (const [key, value] of new FormData(form).entries()) {
      if (typeof value === "string") fields[key] = value;
    }
    if (
      submitter instanceof HTMLButtonElement &&
      submitter.name &&
      submitter.value
    ) {
      fields[submitter.name] = submitter.value;
    }
    const result = await runAction(this.ctx, form.dataset.action!, fields);
    if (result.kind === "navigate") {
      if (window.location.hash === result.hash) {
        await this.render();
      } else {
        window.location.hash = result.hash;
      }
      return;
    }
    await this.render({ error: result.error, values: result.values });
  }
}
