/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_particlefilter_free: (a: number, b: number) => void;
export const anchor_coverage: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const particlefilter_estimate: (a: number) => [number, number];
export const particlefilter_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const particlefilter_observe: (a: number, b: number, c: number, d: number) => [number, number];
export const particlefilter_particles: (a: number) => [number, number];
export const particlefilter_predict: (a: number, b: number) => [number, number];
export const particlefilter_time: (a: number) => number;
export const particlefilter_weights: (a: number) => [number, number];
export const window_match: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
