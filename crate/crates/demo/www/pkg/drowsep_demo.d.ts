/* tslint:disable */
/* eslint-disable */

/**
 * Welch spectrum and band powers of one filtered synthetic epoch (TP9).
 */
export class EpochSpectrum {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Absolute band powers in µV², delta to gamma.
     */
    absolute(): Float64Array;
    density(): Float64Array;
    freqs(): Float64Array;
    relative(): Float64Array;
}

/**
 * Gain in dB of a designed kernel at `points` frequencies spread over 0..=`max_hz`.
 */
export class FilterCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    freqs(): Float64Array;
    gains_db(): Float64Array;
    readonly taps: number;
}

export class RankSum {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly method: string;
    /**
     * Brute-force p-value, present when the pooled sample is small enough.
     */
    readonly oracle_p: number | undefined;
    readonly p_value: number;
    readonly u: number;
}

export function filter_response(highpass: boolean, cutoff_hz: number, transition_hz: number, max_hz: number, points: number): FilterCurve;

/**
 * Rank-sum test of two comma or space separated samples.
 */
export function rank_sum(a: string, b: string): RankSum;

/**
 * Generates a drowsy epoch whose band amplitudes are the defaults scaled
 * by `multipliers` (delta to gamma), filters it and estimates its spectrum.
 */
export function synthetic_spectrum(multipliers: Float64Array, seed: bigint): EpochSpectrum;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_epochspectrum_free: (a: number, b: number) => void;
    readonly __wbg_filtercurve_free: (a: number, b: number) => void;
    readonly __wbg_ranksum_free: (a: number, b: number) => void;
    readonly epochspectrum_absolute: (a: number) => [number, number];
    readonly epochspectrum_density: (a: number) => [number, number];
    readonly epochspectrum_freqs: (a: number) => [number, number];
    readonly epochspectrum_relative: (a: number) => [number, number];
    readonly filter_response: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly filtercurve_freqs: (a: number) => [number, number];
    readonly filtercurve_gains_db: (a: number) => [number, number];
    readonly filtercurve_taps: (a: number) => number;
    readonly rank_sum: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly ranksum_method: (a: number) => [number, number];
    readonly ranksum_oracle_p: (a: number) => [number, number];
    readonly ranksum_p_value: (a: number) => number;
    readonly ranksum_u: (a: number) => number;
    readonly synthetic_spectrum: (a: number, b: number, c: bigint) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
