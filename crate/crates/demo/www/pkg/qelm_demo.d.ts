/* tslint:disable */
/* eslint-disable */

/**
 * Mean test MSE over a log-spaced field grid.
 */
export function field_sweep(epsilon: number, points: number, realizations: number, seed: bigint): string;

/**
 * Train on two-qubit Werner states, test on larger ones, dress with the first test point.
 */
export function generalization(test_qubits: number, seed: bigint): string;

/**
 * One trained reservoir: test predictions against their targets.
 */
export function scatter(epsilon: number, field_strength: number, delta_t: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly field_sweep: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly generalization: (a: number, b: bigint) => [number, number, number, number];
    readonly scatter: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
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
