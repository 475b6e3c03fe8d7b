import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Failure reported by the core toolkit; the message is its stderr text verbatim. */
export class VoxsampleError extends Error {}

/** Flag or argument problem (core exit code 2) as opposed to a runtime failure. */
export class UsageError extends VoxsampleError {}

export interface SampleOptions {
  /** "simple" | "linear:K" | "exp:K" | "mixed:Ke,Kl,t", or a bare kind with strata. */
  strategy?: string;
  strata?: number;
  size?: number;
  /** Sample size as a percentage of the voxel count; exclusive with size. */
  percent?: number;
  seed?: number;
  chunkLen?: number;
  minOne?: boolean;
}

export interface SegmentOptions extends SampleOptions {
  model?: "gmm" | "kmeans" | "minibatch";
  clusters: number;
  maxIter?: number;
  tol?: number;
  restarts?: number;
  batchSize?: number;
  threads?: number;
}

export interface SegmentReport {
  seed: number;
  voxelCount: number;
  sampleSize: number;
  sampleSeconds: number;
  fitSeconds: number;
  classifySeconds: number;
  labelHistogram: number[];
}

function sampleFlags(opts: SampleOptions): string[] {
  const flags: string[] = [];
  if (opts.strategy !== undefined) flags.push("--strategy", opts.strategy);
  if (opts.strata !== undefined) flags.push("--strata", String(opts.strata));
  if (opts.size !== undefined) flags.push("--size", String(opts.size));
  if (opts.percent !== undefined) flags.push("--percent", String(opts.percent));
  if (opts.seed !== undefined) flags.push("--seed", String(opts.seed));
  if (opts.chunkLen !== undefined) flags.push("--chunk-len", String(opts.chunkLen));
  if (opts.minOne) flags.push("--min-one");
  return flags;
}

function segmentFlags(opts: SegmentOptions): string[] {
  const flags = sampleFlags(opts);
  if (opts.model !== undefined) flags.push("--model", opts.model);
  flags.push("--clusters", String(opts.clusters));
  if (opts.maxIter !== undefined) flags.push("--max-iter", String(opts.maxIter));
  if (opts.tol !== undefined) flags.push("--tol", String(opts.tol));
  if (opts.restarts !== undefined) flags.push("--restarts", String(opts.restarts));
  if (opts.batchSize !== undefined) flags.push("--batch-size", String(opts.batchSize));
  if (opts.threads !== undefined) flags.push("--threads", String(opts.threads));
  return flags;
}

function parseReport(stdout: string): SegmentReport {
  const kv = new Map<string, string>();
  for (const line of stdout.split("\n")) {
    const m = /^([a-z_]+): (.*)$/.exec(line);
    if (m) kv.set(m[1], m[2]);
  }
  const field = (key: string): string => {
    const value = kv.get(key);
    if (value === undefined) {
      throw new VoxsampleError(`report is missing '${key}':\n${stdout}`);
    }
    return value;
  };
  return {
    seed: Number(field("seed")),
    voxelCount: Number(field("voxel_count")),
    sampleSize: Number(field("sample_size")),
    sampleSeconds: Number(field("sample_seconds")),
    fitSeconds: Number(field("fit_seconds")),
    classifySeconds: Number(field("classify_seconds")),
    labelHistogram: field("label_histogram").split(" ").map(Number),
  };
}

/**
 * One handle to the voxsample command-line core.
 *
 * Every call shells out to the same executable the CLI user runs, so results
 * are bit-identical to the equivalent command by construction. Calls block;
 * any parallelism happens inside the core process.
 */
export class Session {
  /** Executable the session shells out to. */
  readonly cli: string;
  /** Core toolkit version, read from the executable at construction. */
  readonly version: string;
  /** Stderr text of the most recent failed call, empty after a success. */
  lastError = "";

  constructor(cli?: string) {
    this.cli = cli ?? process.env.VOXSAMPLE_CLI ?? "voxsample";
    const out = this.run(["--version"]);
    const m = /^voxsample (\S+)/.exec(out);
    if (!m) throw new VoxsampleError(`unexpected --version output: ${out.trim()}`);
    this.version = m[1];
  }

  /**
   * Draw a sample exactly as `voxsample sample` would: identical values in
   * identical order for equal flags and seed.
   */
  stratifiedSample(volume: string, opts: SampleOptions): Float64Array {
    const dir = mkdtempSync(join(tmpdir(), "voxsample-"));
    try {
      const out = join(dir, "sample.f64");
      this.run(["sample", volume, ...sampleFlags(opts), "--out", out]);
      const raw = readFileSync(out);
      // copy into a fresh buffer: pooled Buffers need not be 8-byte aligned
      const aligned = new ArrayBuffer(raw.byteLength);
      new Uint8Array(aligned).set(raw);
      return new Float64Array(aligned);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }

  /**
   * Run the full sample/fit/classify pipeline, writing the label volume to
   * `outPath` plus its sidecar, and return the parsed run report.
   */
  segment(volume: string, opts: SegmentOptions, outPath: string): SegmentReport {
    const stdout = this.run([
      "segment", volume, ...segmentFlags(opts), "--kv", "--out", outPath,
    ]);
    return parseReport(stdout);
  }

  private run(args: string[]): string {
    const proc = spawnSync(this.cli, args, { encoding: "utf8" });
    if (proc.error) {
      throw new VoxsampleError(`cannot run '${this.cli}': ${proc.error.message}`);
    }
    if (proc.status !== 0) {
      this.lastError = proc.stderr.trim();
      const kind = proc.status === 2 ? UsageError : VoxsampleError;
      throw new kind(this.lastError);
    }
    this.lastError = "";
    return proc.stdout;
  }
}
