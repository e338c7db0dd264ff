/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Covariate box half-width; points lie in [-extent, extent]².
     */
    static extent(): number;
    /**
     * Kernel weight of every training point with respect to the query.
     */
    kernel_weights(model: string, x1: number, x2: number): Float64Array;
    /**
     * `[d1, d2, min_eigenvalue, ambiguous]` at the query.
     */
    lsvi(model: string, x1: number, x2: number): Float64Array;
    /**
     * Simulates `n` points and fits both forests.
     */
    constructor(n: number, trees: number, min_leaf: number, seed: number);
    /**
     * Training covariates, interleaved `x1, x2, x1, x2, …`.
     */
    points(): Float64Array;
    /**
     * Predictions on a `res`×`res` grid over the box, row by row from the top (x2 = +extent).
     */
    predict_grid(model: string, res: number): Float64Array;
    responses(): Float64Array;
    /**
     * The noiseless regression function on the same grid.
     */
    static truth_grid(res: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_extent: () => number;
    readonly demo_kernel_weights: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_lsvi: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_points: (a: number) => [number, number];
    readonly demo_predict_grid: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_responses: (a: number) => [number, number];
    readonly demo_truth_grid: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
