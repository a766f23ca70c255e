/* tslint:disable */
/* eslint-disable */

/**
 * A moving-basis QSD trajectory launched on the chaotic attractor, advanced
 * in slices so the page stays responsive.
 */
export class QuantumRun {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Steps through `dtau` more time; returns the new `(q, p)` samples flattened.
     */
    advance(dtau: number, stride: number): Float64Array;
    /**
     * First chaotic→regular transition time, or NaN while still chaotic.
     */
    escape_tau(): number;
    constructor(g0: number, seed: bigint, truncation: number);
    tau(): number;
    /**
     * Largest top-level population of the frame, a truncation-quality gauge.
     */
    top_population(): number;
}

/**
 * Mean-field orbit from `(q, p, α = 0)`, flattened as `[q0, p0, q1, p1, ...]`.
 */
export function classical_orbit(g0: number, q: number, p: number, periods: number, stride: number): Float64Array;

/**
 * Largest Lyapunov exponent from `(q, p, α = 0)` as `[exponent, stderr]`.
 */
export function lyapunov(g0: number, q: number, p: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_quantumrun_free: (a: number, b: number) => void;
    readonly classical_orbit: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly lyapunov: (a: number, b: number, c: number) => [number, number, number, number];
    readonly quantumrun_advance: (a: number, b: number, c: number) => [number, number, number, number];
    readonly quantumrun_escape_tau: (a: number) => number;
    readonly quantumrun_new: (a: number, b: bigint, c: number) => [number, number, number];
    readonly quantumrun_tau: (a: number) => number;
    readonly quantumrun_top_population: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
