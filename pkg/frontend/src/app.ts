// Wiring: tabs, the acting-user selector, form handlers, and the polling
// loop. All state shown here is re-fetched from the API; a hard refresh
// reproduces the view.

import { ApiClient, ApiError } from "./api.js";
import {
  renderAddUserForm,
  renderDeviceBuilder,
  renderDiagnostics,
  renderInbox,
  renderNotifications,
  renderPendingPrompts,
  renderPolicyList,
  renderUserTable,
} from "./render.js";
import type { ClauseDoc, NotificationDoc } from "./types.js";

const api = new ApiClient("");
const POLL_MS = 2000;

let actingUser = localStorage.getItem("homegate.actingUser") ?? "";
let notificationCursor = 0;
const feed: NotificationDoc[] = [];

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function showError(form: HTMLElement, message: string): void {
  const slot = form.querySelector("[data-error]");
  if (slot) slot.textContent = message;
}

// Re-render only when content changed, and never under the user's cursor,
// so the poll loop cannot clobber a half-filled form.
function setHtml(node: HTMLElement, html: string): void {
  if (node.innerHTML === html) return;
  if (node.contains(document.activeElement) && document.activeElement !== document.body) {
    return;
  }
  node.innerHTML = html;
}

async function refresh(): Promise<void> {
  const [usersDoc, policiesDoc, sessionsDoc, devicesDoc, clockDoc] = await Promise.all([
    api.listUsers(), api.listPolicies(), api.listSessions(), api.listDevices(), api.clock(),
  ]);

  const users = usersDoc.users;
  const names = Object.keys(users).sort();
  if (!actingUser || !names.includes(actingUser)) {
    actingUser = names[0] ?? "";
  }
  const admins = names.filter((n) => users[n].cls === 0);

  const picker = el("acting-user") as HTMLSelectElement;
  picker.innerHTML = names
    .map((n) => `<option value="${n}"${n === actingUser ? " selected" : ""}>${n}</option>`)
    .join("");

  setHtml(el("user-table"), renderUserTable(users, clockDoc.clock));
  setHtml(el("pending-prompts"), renderPendingPrompts(usersDoc.pending));
  setHtml(el("add-user"), renderAddUserForm(actingUser, users[actingUser]));

  setHtml(el("policy-list"), renderPolicyList(policiesDoc.clauses));
  setHtml(el("device-builder"), renderDeviceBuilder(
    devicesDoc.devices, names.filter((n) => n !== actingUser)));

  const clausesById = new Map<number, ClauseDoc>(
    policiesDoc.clauses.map((c) => [c.id, c]));
  setHtml(el("inbox"), renderInbox(
    sessionsDoc.sessions, clausesById, actingUser, admins));

  const fresh = await api.notifications(notificationCursor);
  if (fresh.notifications.length > 0) {
    feed.push(...fresh.notifications);
    notificationCursor = fresh.cursor;
    setHtml(el("notifications"), renderNotifications(feed));
  } else if (feed.length === 0) {
    setHtml(el("notifications"), renderNotifications([]));
  }
}

function wireTabs(): void {
  document.querySelectorAll<HTMLButtonElement>("nav button").forEach((button) => {
    button.addEventListener("click", () => {
      document.querySelectorAll("nav button").forEach((b) => b.classList.remove("active"));
      document.querySelectorAll("main section").forEach((s) => s.classList.remove("active"));
      button.classList.add("active");
      el(button.dataset.tab!).classList.add("active");
    });
  });
}

function wireActingUser(): void {
  el("acting-user").addEventListener("change", (event) => {
    actingUser = (event.target as HTMLSelectElement).value;
    localStorage.setItem("homegate.actingUser", actingUser);
    void refresh();
  });
}

function wireUserForms(): void {
  el("add-user").addEventListener("submit", async (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const data = new FormData(form);
    try {
      if (form.id === "bootstrap-form") {
        await api.bootstrapOwner(String(data.get("user")));
      } else {
        await api.addUser({
          commander: actingUser,
          user: String(data.get("user")),
          priority: Number(data.get("priority")),
          device_perm: data.get("device_perm") !== null,
          validity: data.get("validity") ? Number(data.get("validity")) : undefined,
        });
      }
      await refresh();
    } catch (err) {
      if (err instanceof ApiError) {
        const tag = err.threatTag ? ` [${err.threatTag}]` : "";
        showError(form, `${err.message}${tag}`);
      } else {
        throw err;
      }
    }
  });

  el("pending-prompts").addEventListener("click", async (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button.resolve");
    if (!button) return;
    await api.resolvePending(
      button.dataset.user!, Number(button.dataset.class), actingUser);
    await refresh();
  });
}

function clockToMinutes(value: string): number {
  const [h, m] = value.split(":").map(Number);
  return h * 60 + m;
}

function wirePolicyForms(): void {
  el("device-builder").addEventListener("submit", async (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const data = new FormData(form);
    const start = String(data.get("start") ?? "");
    const end = String(data.get("end") ?? "");
    const low = String(data.get("low") ?? "");
    const high = String(data.get("high") ?? "");
    try {
      await api.submitDevicePolicy({
        user: actingUser,
        device: String(data.get("device")),
        restricted: String(data.get("restricted")),
        time_window: start && end
          ? [clockToMinutes(start), clockToMinutes(end)] : undefined,
        value_range: low !== "" && high !== ""
          ? [Number(low), Number(high)] : undefined,
      });
      await refresh();
    } catch (err) {
      if (err instanceof ApiError) showError(form, err.message);
      else throw err;
    }
  });

  const editor = el("policy-editor") as HTMLTextAreaElement;
  let debounce: number | undefined;
  editor.addEventListener("input", () => {
    window.clearTimeout(debounce);
    debounce = window.setTimeout(async () => {
      const parsed = await api.dryRunParse(editor.value);
      el("editor-diagnostics").innerHTML = renderDiagnostics(parsed.diagnostics);
    }, 300);
  });

  el("submit-policy-text").addEventListener("click", async () => {
    try {
      const result = await api.submitPolicyText(editor.value);
      el("editor-diagnostics").innerHTML = renderDiagnostics(result.diagnostics);
      editor.value = "";
      await refresh();
    } catch (err) {
      if (err instanceof ApiError) {
        el("editor-diagnostics").textContent = err.message;
      } else {
        throw err;
      }
    }
  });
}

function wireInbox(): void {
  el("inbox").addEventListener("click", async (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button.respond");
    if (!button) return;
    try {
      await api.respond(
        Number(button.dataset.session), actingUser,
        button.dataset.verdict as "accept" | "reject");
    } catch (err) {
      if (!(err instanceof ApiError) || err.status !== 409) throw err;
      // stale card: the session closed under us; the refresh below fixes the view
    }
    await refresh();
  });
}

export function start(): void {
  wireTabs();
  wireActingUser();
  wireUserForms();
  wirePolicyForms();
  wireInbox();
  void refresh();
  window.setInterval(() => void refresh(), POLL_MS);
}

start();
