/* tslint:disable */
/* eslint-disable */

/**
 * Two Gaussian packets sent towards each other on a ring.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    density1(): Float64Array;
    density2(): Float64Array;
    energyDrift(): number;
    massDefect(): number;
    constructor(points: number, length: number, semirelativistic1: boolean, semirelativistic2: boolean, lambda11: number, lambda22: number, lambda12: number, momentum: number);
    step(dt: number, steps: number): void;
    time(): number;
}

export function kernelProfile(points: number, length: number, lambda: number, mu: number, epsilon: number): Float64Array;

export function srCheck(lambda11: number, lambda22: number, lambda12: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_density1: (a: number) => [number, number];
    readonly demo_density2: (a: number) => [number, number];
    readonly demo_energyDrift: (a: number) => [number, number, number];
    readonly demo_massDefect: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly demo_step: (a: number, b: number, c: number) => [number, number];
    readonly demo_time: (a: number) => number;
    readonly kernelProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly srCheck: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
