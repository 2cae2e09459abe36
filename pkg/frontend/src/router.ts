/** Hash router: #/login, #/register, #/dashboard, #/chain. */

import { PortalStore } from "./state.js";
import {
  renderChain,
  renderDoctorDashboard,
  renderLogin,
  renderPatientDashboard,
  renderRegister,
} from "./views.js";

export type Route = "login" | "register" | "dashboard" | "chain";

export function parseRoute(hash: string): Route {
  const name = hash.replace(/^#\//, "");
  if (name === "register" || name === "dashboard" || name === "chain") return name;
  return "login";
}

export function renderRoute(root: HTMLElement, store: PortalStore, route: Route): void {
  if (route === "dashboard" && !store.session) route = "login";
  switch (route) {
    case "register":
      renderRegister(root, store);
      break;
    case "dashboard":
      if (store.session?.role === "DOCTOR") renderDoctorDashboard(root, store);
      else renderPatientDashboard(root, store);
      break;
    case "chain":
      renderChain(root, store);
      break;
    default:
      renderLogin(root, store);
  }
}

export function startRouter(root: HTMLElement, store: PortalStore): void {
  const render = () => renderRoute(root, store, parseRoute(location.hash));
  window.addEventListener("hashchange", render);
  render();
}
