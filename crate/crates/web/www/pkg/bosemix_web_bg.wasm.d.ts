/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_density1: (a: number) => [number, number];
export const demo_density2: (a: number) => [number, number];
export const demo_energyDrift: (a: number) => [number, number, number];
export const demo_massDefect: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const demo_step: (a: number, b: number, c: number) => [number, number];
export const demo_time: (a: number) => number;
export const kernelProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const srCheck: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
