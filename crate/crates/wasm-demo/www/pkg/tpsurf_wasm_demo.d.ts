/* tslint:disable */
/* eslint-disable */

/**
 * Triangle mesh handed to JavaScript as flat typed arrays.
 */
export class Surface {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `undefined` when the mesh is open or non-manifold.
     */
    genus(): number | undefined;
    /**
     * Three vertex indices per triangle.
     */
    indices(): Uint32Array;
    /**
     * `x, y, z` per vertex.
     */
    positions(): Float32Array;
}

/**
 * `[f, H, K, 4H^2 - 2K]` of the chosen field at `(x, y, z)`.
 */
export function curvature(kind: string, param: number, x: number, y: number, z: number): Float64Array;

/**
 * Runs marching cubes over `[-0.55, 0.55]^3` at `resolution` samples per axis.
 */
export function extract(kind: string, param: number, resolution: number): Surface;

/**
 * Smoothness factor for iterations `0..iterations` with restart period `cycle`.
 */
export function schedule(cycle: number, iterations: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_surface_free: (a: number, b: number) => void;
    readonly curvature: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly extract: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly schedule: (a: number, b: number) => [number, number];
    readonly surface_genus: (a: number) => number;
    readonly surface_indices: (a: number) => [number, number];
    readonly surface_positions: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
