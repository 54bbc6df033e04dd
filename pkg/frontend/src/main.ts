import { QuizApi } from "./api";
import { createApp } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
createApp(root, new QuizApi(""));
