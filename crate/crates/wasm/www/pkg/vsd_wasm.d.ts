/* tslint:disable */
/* eslint-disable */

export class BloodAnalysis {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    overlay(): Uint8Array;
    summary_json(): string;
}

export class BloodExplorer {
    free(): void;
    [Symbol.dispose](): void;
    analyze(rgba: Uint8Array, width: number, height: number, threshold: number): BloodAnalysis;
    constructor(seed: bigint);
    /**
     * Blood probability of one pixel.
     */
    probability(r: number, g: number, b: number): number;
}

export class FusionExplorer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * EER for weights summing to 1 in steps of 0.05, as JSON.
     */
    evaluate(weights: Float64Array): string;
    /**
     * `separation` holds one score shift per channel: audio, blood, motion,
     * concepts.
     */
    constructor(seed: bigint, segments: number, separation: Float64Array);
    /**
     * Exhaustive grid search, as JSON.
     */
    search(): string;
}

/**
 * ROC vertices and metrics of a generated fixture, as JSON.
 */
export function roc_json(seed: bigint, n: number, separation: number, prevalence: number, threshold: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_bloodanalysis_free: (a: number, b: number) => void;
    readonly __wbg_bloodexplorer_free: (a: number, b: number) => void;
    readonly __wbg_fusionexplorer_free: (a: number, b: number) => void;
    readonly bloodanalysis_overlay: (a: number) => [number, number];
    readonly bloodanalysis_summary_json: (a: number) => [number, number];
    readonly bloodexplorer_analyze: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly bloodexplorer_new: (a: bigint) => number;
    readonly bloodexplorer_probability: (a: number, b: number, c: number, d: number) => number;
    readonly fusionexplorer_evaluate: (a: number, b: number, c: number) => [number, number, number, number];
    readonly fusionexplorer_new: (a: bigint, b: number, c: number, d: number) => [number, number, number];
    readonly fusionexplorer_search: (a: number) => [number, number, number, number];
    readonly roc_json: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
