/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_quantumrun_free: (a: number, b: number) => void;
export const classical_orbit: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const lyapunov: (a: number, b: number, c: number) => [number, number, number, number];
export const quantumrun_advance: (a: number, b: number, c: number) => [number, number, number, number];
export const quantumrun_escape_tau: (a: number) => number;
export const quantumrun_new: (a: number, b: bigint, c: number) => [number, number, number];
export const quantumrun_tau: (a: number) => number;
export const quantumrun_top_population: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
