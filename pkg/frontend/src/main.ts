import { ApiClient } from "./api.js";
import { bindApp } from "./app.js";

const app = bindApp(document, new ApiClient(""));
void app.init();
