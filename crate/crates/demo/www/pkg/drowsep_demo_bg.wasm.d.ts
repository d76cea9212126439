/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_epochspectrum_free: (a: number, b: number) => void;
export const __wbg_filtercurve_free: (a: number, b: number) => void;
export const __wbg_ranksum_free: (a: number, b: number) => void;
export const epochspectrum_absolute: (a: number) => [number, number];
export const epochspectrum_density: (a: number) => [number, number];
export const epochspectrum_freqs: (a: number) => [number, number];
export const epochspectrum_relative: (a: number) => [number, number];
export const filter_response: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const filtercurve_freqs: (a: number) => [number, number];
export const filtercurve_gains_db: (a: number) => [number, number];
export const filtercurve_taps: (a: number) => number;
export const rank_sum: (a: number, b: number, c: number, d: number) => [number, number, number];
export const ranksum_method: (a: number) => [number, number];
export const ranksum_oracle_p: (a: number) => [number, number];
export const ranksum_p_value: (a: number) => number;
export const ranksum_u: (a: number) => number;
export const synthetic_spectrum: (a: number, b: number, c: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
