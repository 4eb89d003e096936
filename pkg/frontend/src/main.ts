import { Api } from "./api.js";
import { App } from "./app.js";
import { makeCtx } from "./controllers.js";
import { SessionStore } from "./session.js";

const session = new SessionStore(window.sessionStorage);
const api = new Api("");
api.token = session.get()?.token ?? null;

const root = document.getElementById("root");
if (!root) throw new Error("missing #root element");

new App(makeCtx(api, session), root).start();
