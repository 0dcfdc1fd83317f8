/* tslint:disable */
/* eslint-disable */

/**
 * `[ideal, with_contrasts, duan_simon_ideal, duan_simon_contrasts]` for a
 * raw phase-sum level and a measured amplitude-difference level, in dB.
 */
export function correct(raw_db: number, rho: number, eta: number, c1: number, c2: number, s_minus_db: number): Float64Array;

/**
 * Calibrate to the two measured levels and sample `n` log-spaced points in
 * `[f_lo, f_hi]`. Flattened rows of
 * `[freq_hz, s_minus_true, s_minus_measured, s_plus_true, s_plus_raw]` (dB).
 */
export function model_spectra(s_minus_db: number, s_plus_raw_db: number, f_lo: number, f_hi: number, n: number): Float64Array;

/**
 * Phase-sum ratio seen by an ideal homodyne chain with LO phase `theta`
 * on both arms, against the true level; rows of `[theta, ratio_db]`.
 */
export function quadrature_curve(s_plus_true_db: number, rho: number, n: number): Float64Array;

/**
 * Short Monte-Carlo run of the nominal calibrated OPO through direct
 * detection. Rows of `[freq_hz, signal_db, snl_45deg_db]` relative to SNL.
 */
export function simulate_intensity_difference(seed: bigint, trajectories: number, rbw_hz: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly correct: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly model_spectra: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly quadrature_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulate_intensity_difference: (a: bigint, b: number, c: number) => [number, number, number, number];
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
