import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const base =
  document.querySelector('meta[name="wb-api-base"]')?.getAttribute("content") ?? "";
const root = document.getElementById("app");
if (root) {
  void createApp(root, new ApiClient(base)).start();
}
