export * from "./grammar";
export * from "./api";
export * from "./view";
