"""Work-directory orchestration of the full super-resolution loop.

The stages communicate through files with fixed names inside one work
directory, so the learned super-resolver can run out of process:

    hsi_hr.npy   normalized high-resolution cube (written by `degrade`)
    hsi_lr.npy   degraded low-resolution cube (written by `degrade`)
    S.npy        endmember matrix, bands x materials (written by `unmix`)
    a_lr.npy     low-resolution abundances (written by `unmix`)
    corpus/      synthetic training pairs + manifest.json (written by `synth`)
    hsi_sr.npy   reconstructed super-resolved cube (written by `reconstruct`)

External cubes are globally normalized to [0, 1] on ingestion (config flag
`normalize_input`); artifacts inside the work directory are already on that
scale and are never re-normalized. A lock file guards against concurrent
invocations on the same work directory.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout

from .cube import AbundanceMaps, EndmemberMatrix, HsiCube, load_tensor, normalize_global, save_tensor
from .deadleaves import DeadLeavesConfig, ValuePool, build_value_pool, derive_seed, generate_map
from .degrade import PsfConfig, degrade, upsample_bicubic
from .exceptions import ConfigError, IoError, ShapeError, WorkdirLockedError
from .metrics import PatchEvaluation, evaluate_patches
from .unmix import UnmixConfig, estimate_abundances, extract_endmember_indices, reconstruct

__all__ = [
    "EvalConfig",
    "PipelineConfig",
    "cmd_degrade",
    "cmd_unmix",
    "cmd_synth",
    "cmd_baseline",
    "cmd_reconstruct",
    "cmd_eval",
    "workdir_lock",
    "HSI_HR_FILE",
    "HSI_LR_FILE",
    "S_FILE",
    "A_LR_FILE",
    "HSI_SR_FILE",
    "CORPUS_DIR",
    "MANIFEST_FILE",
]

HSI_HR_FILE = "hsi_hr.npy"
HSI_LR_FILE = "hsi_lr.npy"
S_FILE = "S.npy"
A_LR_FILE = "a_lr.npy"
HSI_SR_FILE = "hsi_sr.npy"
CORPUS_DIR = "corpus"
MANIFEST_FILE = "manifest.json"
LOCK_FILE = ".hsisr.lock"


@dataclass(frozen=True)
class EvalConfig:
    """Patch-grid evaluation settings."""

    patch_size: int = 76
    grid: int = 4

    def __post_init__(self):
        if self.patch_size < 1 or self.grid < 1:
            raise ConfigError(
                f"patch_size and grid must be >= 1, got {self.patch_size}, {self.grid}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs: paths, sub-configs, corpus size, seed."""

    input_cube: str
    workdir: str
    unmix: UnmixConfig
    deadleaves: DeadLeavesConfig
    psf: PsfConfig = field(default_factory=PsfConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    hr_reference: str | None = None
    corpus_count: int = 5000
    base_seed: int = 0
    normalize_input: bool = True

    def __post_init__(self):
        if self.corpus_count < 1:
            raise ConfigError(f"corpus_count must be >= 1, got {self.corpus_count}")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        try:
            unmix_cfg = UnmixConfig(**d["unmix"])
            dl = dict(d["deadleaves"])
            dl.setdefault("n_materials", unmix_cfg.n_materials)
            return cls(
                input_cube=d["input_cube"],
                workdir=d["workdir"],
                unmix=unmix_cfg,
                deadleaves=DeadLeavesConfig(**dl),
                psf=PsfConfig(**d.get("psf", {})),
                evaluation=EvalConfig(**d.get("evaluation", {})),
                hr_reference=d.get("hr_reference"),
                corpus_count=int(d.get("corpus_count", 5000)),
                base_seed=int(d.get("base_seed", 0)),
                normalize_input=bool(d.get("normalize_input", True)),
            )
        except KeyError as exc:
            raise ConfigError(f"pipeline config is missing required key {exc}") from exc
        except TypeError as exc:
            raise ConfigError(f"pipeline config has an unknown or bad field: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(payload)

    def to_dict(self) -> dict:
        return {
            "input_cube": self.input_cube,
            "workdir": self.workdir,
            "unmix": {"n_materials": self.unmix.n_materials,
                      "nonneg_clip": self.unmix.nonneg_clip},
            "deadleaves": {
                "out_rows": self.deadleaves.out_rows,
                "out_cols": self.deadleaves.out_cols,
                "n_materials": self.deadleaves.n_materials,
                "size_min": self.deadleaves.size_min,
                "size_max": self.deadleaves.size_max,
                "size_exponent": self.deadleaves.size_exponent,
                "rng_seed": self.deadleaves.rng_seed,
                "max_leaves": self.deadleaves.max_leaves,
            },
            "psf": {"sigma": self.psf.sigma,
                    "truncation_radius_sigmas": self.psf.truncation_radius_sigmas,
                    "scale": self.psf.scale,
                    "boundary": self.psf.boundary},
            "evaluation": {"patch_size": self.evaluation.patch_size,
                           "grid": self.evaluation.grid},
            "hr_reference": self.hr_reference,
            "corpus_count": self.corpus_count,
            "base_seed": self.base_seed,
            "normalize_input": self.normalize_input,
        }


@contextmanager
def workdir_lock(workdir):
    """Exclusive advisory lock on a work directory; fails fast if held."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(workdir / LOCK_FILE))
    try:
        lock.acquire(timeout=0)
    except Timeout as exc:
        raise WorkdirLockedError(
            f"work directory {workdir} is locked by another invocation"
        ) from exc
    try:
        yield workdir
    finally:
        lock.release()


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_external_cube(path, cfg: PipelineConfig) -> HsiCube:
    cube = load_tensor(path, kind="cube")
    if cfg.normalize_input:
        cube = normalize_global(cube)
    return cube


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise IoError(f"missing {path}; {hint}")
    return path


def _write_patch_reports(workdir: Path, stem: str, result: PatchEvaluation) -> None:
    _write_json(workdir / f"{stem}_report.json", result.to_dict())
    result.write_csv(workdir / f"{stem}_patches.csv")


def cmd_degrade(cfg: PipelineConfig) -> dict:
    """Normalize the input cube and apply the acquisition operator.

    Writes the normalized high-resolution cube and its degraded
    low-resolution counterpart into the work directory.
    """
    with workdir_lock(cfg.workdir) as workdir:
        hr = _load_external_cube(cfg.input_cube, cfg)
        lr = degrade(hr, cfg.psf)
        save_tensor(hr, workdir / HSI_HR_FILE)
        save_tensor(lr, workdir / HSI_LR_FILE)
        summary = {
            "hr_shape": list(hr.data.shape),
            "lr_shape": list(lr.data.shape),
            "scale": cfg.psf.scale,
            "sigma": cfg.psf.sigma,
        }
        print(f"degrade: {hr.data.shape} -> {lr.data.shape} "
              f"(sigma={cfg.psf.sigma}, scale={cfg.psf.scale})")
        return summary


def _lr_source(cfg: PipelineConfig, workdir: Path) -> HsiCube:
    lr_path = workdir / HSI_LR_FILE
    if lr_path.exists():
        return load_tensor(lr_path, kind="cube")
    return _load_external_cube(cfg.input_cube, cfg)


def cmd_unmix(cfg: PipelineConfig) -> dict:
    """Extract endmembers and abundances from the low-resolution cube.

    Reads hsi_lr.npy when the degrade stage ran, otherwise the configured
    input cube. Writes S.npy and a_lr.npy plus a residual summary.
    """
    with workdir_lock(cfg.workdir) as workdir:
        cube = _lr_source(cfg, workdir)
        indices = extract_endmember_indices(cube, cfg.unmix)
        endmembers = EndmemberMatrix(cube.as_matrix()[:, indices])
        abundances = estimate_abundances(cube, endmembers, cfg.unmix)
        residual = reconstruct(endmembers, abundances).data - cube.data
        save_tensor(endmembers, workdir / S_FILE)
        save_tensor(abundances, workdir / A_LR_FILE)
        summary = {
            "n_materials": cfg.unmix.n_materials,
            "endmember_shape": list(endmembers.data.shape),
            "abundance_shape": list(abundances.data.shape),
            "selected_pixel_indices": [int(i) for i in indices],
            "residual_rmse": float(np.sqrt(np.mean(residual**2))),
            "residual_max_abs": float(np.abs(residual).max()),
        }
        _write_json(workdir / "unmix_report.json", summary)
        print(f"unmix: S {endmembers.data.shape}, A {abundances.data.shape}, "
              f"residual rmse {summary['residual_rmse']:.3e} "
              f"max {summary['residual_max_abs']:.3e}")
        return summary


def _synth_one(args) -> dict:
    """Generate, degrade, and write one HR/LR pair (worker-safe)."""
    k, cfg_dl, psf, pool_vectors, source_shape, base_seed, corpus = args
    pool = ValuePool(vectors=pool_vectors, source_shape=source_shape)
    seed = derive_seed(base_seed, k)
    hr = generate_map(replace(cfg_dl, rng_seed=seed), pool)
    lr = degrade(hr, psf)
    hr_name = f"adl_hr_{k:05}.npy"
    lr_name = f"adl_lr_{k:05}.npy"
    save_tensor(hr, Path(corpus) / hr_name)
    save_tensor(lr, Path(corpus) / lr_name)
    return {"index": k, "seed": seed, "hr": hr_name, "lr": lr_name}


def cmd_synth(cfg: PipelineConfig, count: int | None = None,
              base_seed: int | None = None, workers: int = 1) -> dict:
    """Generate the synthetic HR/LR abundance pair corpus plus manifest."""
    count = cfg.corpus_count if count is None else count
    base_seed = cfg.base_seed if base_seed is None else base_seed
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    with workdir_lock(cfg.workdir) as workdir:
        a_lr_path = _require(workdir / A_LR_FILE, "run `hsisr unmix` first")
        a_lr = load_tensor(a_lr_path, kind="abundance")
        if a_lr.materials != cfg.deadleaves.n_materials:
            raise ShapeError(
                f"a_lr.npy has {a_lr.materials} materials, config expects "
                f"{cfg.deadleaves.n_materials}"
            )
        pool = build_value_pool(a_lr)
        corpus = workdir / CORPUS_DIR
        corpus.mkdir(exist_ok=True)

        jobs = [
            (k, cfg.deadleaves, cfg.psf, pool.vectors, pool.source_shape,
             base_seed, str(corpus))
            for k in range(count)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool_exec:
                entries = list(pool_exec.map(_synth_one, jobs, chunksize=4))
        else:
            entries = [_synth_one(job) for job in jobs]
        entries.sort(key=lambda e: e["index"])

        scale = cfg.psf.scale
        hr_shape = [cfg.deadleaves.n_materials, cfg.deadleaves.out_rows,
                    cfg.deadleaves.out_cols]
        lr_shape = [cfg.deadleaves.n_materials,
                    -(-cfg.deadleaves.out_rows // scale),
                    -(-cfg.deadleaves.out_cols // scale)]
        manifest = {
            "kind": "deadleaves_corpus",
            "count": count,
            "base_seed": base_seed,
            "scale": scale,
            "hr_shape": hr_shape,
            "lr_shape": lr_shape,
            "config": {
                "deadleaves": cfg.to_dict()["deadleaves"],
                "psf": cfg.to_dict()["psf"],
            },
            "inputs": {A_LR_FILE: {"sha256": _sha256(a_lr_path),
                                   "shape": list(a_lr.data.shape)}},
            "files": entries,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        _write_json(corpus / MANIFEST_FILE, manifest)
        print(f"synth: wrote {count} HR/LR pairs to {corpus} "
              f"(HR {tuple(hr_shape)}, LR {tuple(lr_shape)})")
        return manifest


def _reference_cube(cfg: PipelineConfig, workdir: Path) -> HsiCube:
    hr_path = workdir / HSI_HR_FILE
    if hr_path.exists():
        return load_tensor(hr_path, kind="cube")
    if cfg.hr_reference:
        return _load_external_cube(cfg.hr_reference, cfg)
    raise IoError(
        f"no high-resolution reference: neither {hr_path} nor config "
        "`hr_reference` is available"
    )


def cmd_baseline(cfg: PipelineConfig) -> dict:
    """Score plain bicubic upsampling of the low-resolution cube."""
    with workdir_lock(cfg.workdir) as workdir:
        ref = _reference_cube(cfg, workdir)
        lr = _require(workdir / HSI_LR_FILE, "run `hsisr degrade` first")
        lr_cube = load_tensor(lr, kind="cube")
        est = upsample_bicubic(lr_cube, cfg.psf.scale,
                               target_dims=(ref.rows, ref.cols),
                               boundary=cfg.psf.boundary)
        result = evaluate_patches(ref, est, cfg.evaluation.patch_size,
                                  cfg.evaluation.grid, cfg.psf.scale)
        save_tensor(est, workdir / "hsi_bicubic.npy")
        _write_patch_reports(workdir, "baseline", result)
        print(f"baseline: mPSNR {result.mean_mpsnr:.2f} dB, "
              f"mSAM {result.mean_msam:.2f} deg, mERGAS {result.mean_mergas:.2f}")
        return result.to_dict()


def cmd_reconstruct(cfg: PipelineConfig, a_sr_path) -> dict:
    """Mix externally super-resolved abundances back into a cube and score it.

    When a high-resolution reference is available, the abundances may
    overshoot it by up to scale - 1 pixels per dimension (grids that are not
    multiples of the scale); the overshoot is cropped top-left.
    """
    with workdir_lock(cfg.workdir) as workdir:
        s_path = _require(workdir / S_FILE, "run `hsisr unmix` first")
        endmembers = load_tensor(s_path, kind="endmembers")
        a_sr = load_tensor(a_sr_path, kind="abundance")
        if a_sr.materials != endmembers.materials:
            raise ShapeError(
                f"A_SR has {a_sr.materials} materials but S has "
                f"{endmembers.materials}"
            )
        summary: dict = {"a_sr_shape": list(a_sr.data.shape)}
        ref = None
        try:
            ref = _reference_cube(cfg, workdir)
        except IoError:
            pass
        if ref is not None:
            rows, cols = ref.rows, ref.cols
            extra_r = a_sr.rows - rows
            extra_c = a_sr.cols - cols
            if not (0 <= extra_r < cfg.psf.scale and 0 <= extra_c < cfg.psf.scale):
                raise ShapeError(
                    f"A_SR spatial dims {a_sr.rows}x{a_sr.cols} do not cover the "
                    f"reference {rows}x{cols} within scale-1 slack"
                )
            if extra_r or extra_c:
                a_sr = AbundanceMaps(a_sr.data[:, :rows, :cols])
        sr = reconstruct(endmembers, a_sr)
        save_tensor(sr, workdir / HSI_SR_FILE)
        summary["hsi_sr_shape"] = list(sr.data.shape)
        if ref is not None:
            result = evaluate_patches(ref, sr, cfg.evaluation.patch_size,
                                      cfg.evaluation.grid, cfg.psf.scale)
            _write_patch_reports(workdir, "reconstruct", result)
            summary["evaluation"] = result.to_dict()
            print(f"reconstruct: HSI_SR {sr.data.shape}, mPSNR "
                  f"{result.mean_mpsnr:.2f} dB, mSAM {result.mean_msam:.2f} deg, "
                  f"mERGAS {result.mean_mergas:.2f}")
        else:
            print(f"reconstruct: HSI_SR {sr.data.shape} (no reference, not scored)")
        return summary


def cmd_eval(cfg: PipelineConfig, ref_path=None, est_path=None) -> dict:
    """Patch-grid scores for an arbitrary (reference, estimate) cube pair."""
    with workdir_lock(cfg.workdir) as workdir:
        if ref_path is None:
            ref = _reference_cube(cfg, workdir)
        else:
            ref = _load_external_cube(ref_path, cfg)
        est_path = est_path or _require(workdir / HSI_SR_FILE,
                                        "run `hsisr reconstruct` first")
        est = load_tensor(est_path, kind="cube")
        result = evaluate_patches(ref, est, cfg.evaluation.patch_size,
                                  cfg.evaluation.grid, cfg.psf.scale)
        _write_patch_reports(workdir, "eval", result)
        print(f"eval: mPSNR {result.mean_mpsnr:.2f} dB, mSAM "
              f"{result.mean_msam:.2f} deg, mERGAS {result.mean_mergas:.2f}")
        return result.to_dict()
