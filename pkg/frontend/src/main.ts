import { ApiClient } from "./api.js";
import { startRouter } from "./router.js";
import { PortalStore } from "./state.js";
import { el } from "./views.js";

function boot(): void {
  const api = new ApiClient("");
  const store = new PortalStore(api);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const nav = el(
    "nav",
    {},
    el("a", { href: "#/login" }, "Login"),
    el("a", { href: "#/register" }, "Register"),
    el("a", { href: "#/dashboard" }, "Dashboard"),
    el("a", { href: "#/chain" }, "Chain"),
  );
  const logout = el("button", { type: "button", id: "nav-logout" }, "Log out");
  logout.addEventListener("click", () => {
    void store.logout().then(() => {
      location.hash = "#/login";
    });
  });
  nav.append(logout);
  document.body.insertBefore(nav, root);

  startRouter(root, store);
}

boot();
