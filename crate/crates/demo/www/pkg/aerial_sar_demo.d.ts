/* tslint:disable */
/* eslint-disable */

export class ParticleFilter {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[mean_x, mean_y, var_x, cov_xy, var_y]`.
     */
    estimate(): Float64Array;
    /**
     * Starts a filter around the first measurement at time 0.
     */
    constructor(x: number, y: number, sigma_z: number, v_max: number, n: number, seed: bigint);
    /**
     * Moves time forward by `dt` and applies a measurement.
     */
    observe(dt: number, x: number, y: number): void;
    /**
     * Interleaved `[x0, y0, x1, y1, ...]`.
     */
    particles(): Float64Array;
    /**
     * Moves time forward without a measurement; the cloud spreads.
     */
    predict(dt: number): void;
    time(): number;
    weights(): Float64Array;
}

/**
 * Dual-threshold anchor assignment of ground-truth boxes in a `width` x `height` image.
 */
export function anchor_coverage(gt: Float64Array, width: number, height: number, custom_scales: boolean): string;

/**
 * Matches a mapped optical box against thermal candidates, with and without
 * the sliding window.
 */
export function window_match(mapped: Float64Array, candidates: Float64Array, grid: number, region_scale: number, iou_threshold: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_particlefilter_free: (a: number, b: number) => void;
    readonly anchor_coverage: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly particlefilter_estimate: (a: number) => [number, number];
    readonly particlefilter_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly particlefilter_observe: (a: number, b: number, c: number, d: number) => [number, number];
    readonly particlefilter_particles: (a: number) => [number, number];
    readonly particlefilter_predict: (a: number, b: number) => [number, number];
    readonly particlefilter_time: (a: number) => number;
    readonly particlefilter_weights: (a: number) => [number, number];
    readonly window_match: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
