import { ApiClient } from "./api";
import { createApp } from "./app";

declare global {
  interface Window {
    VAXLEDGER_API?: string;
  }
}

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app root element");

// Same-origin by default (the node can mount the bundle at /ui); override
// with window.VAXLEDGER_API when serving the bundle separately.
const api = new ApiClient(window.VAXLEDGER_API ?? "");
createApp(root, api).navigate("login");
