/* tslint:disable */
/* eslint-disable */

/**
 * Free parameter count of a model.
 */
export function degreesOfFreedom(p: number, q_s: number, q_e: number, scaled: boolean, estimate_gamma01: boolean): number;

/**
 * Unit vector in R^5 for a moment tensor given as `Mrr, Mtt, Mff, Mrt, Mrf, Mtf`.
 */
export function momentTensorToS4(m: Float64Array, normalize: boolean): Float64Array;

/**
 * Simulates `n` responses on S^2 with two Euclidean covariates and scales
 * `(a2, 1/a2)`, fits the scaled model and returns a JSON summary.
 */
export function simulateAndFit(seed: bigint, n: number, kappa: number, a2: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly degreesOfFreedom: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly momentTensorToS4: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulateAndFit: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
