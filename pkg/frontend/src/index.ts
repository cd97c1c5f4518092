export * from "./vec.js";
export * from "./protocol.js";
export * from "./script.js";
export * from "./client.js";
export * from "./camera.js";
export * from "./plane.js";
export * from "./gestures.js";
export * from "./view.js";
export * from "./editor.js";
