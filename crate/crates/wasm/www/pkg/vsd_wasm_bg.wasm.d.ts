/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_bloodanalysis_free: (a: number, b: number) => void;
export const __wbg_bloodexplorer_free: (a: number, b: number) => void;
export const __wbg_fusionexplorer_free: (a: number, b: number) => void;
export const bloodanalysis_overlay: (a: number) => [number, number];
export const bloodanalysis_summary_json: (a: number) => [number, number];
export const bloodexplorer_analyze: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const bloodexplorer_new: (a: bigint) => number;
export const bloodexplorer_probability: (a: number, b: number, c: number, d: number) => number;
export const fusionexplorer_evaluate: (a: number, b: number, c: number) => [number, number, number, number];
export const fusionexplorer_new: (a: bigint, b: number, c: number, d: number) => [number, number, number];
export const fusionexplorer_search: (a: number) => [number, number, number, number];
export const roc_json: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
