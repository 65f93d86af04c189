"""Orchestration: spectra, bound verification and sweeps, with result caching.

Two caches are involved:

* an in-memory spectrum cache keyed by the scenario's spectral hash, so a
  sweep over Λ, σ, ε or α assembles the spectrum once;
* an on-disk, content-addressed cache of result records keyed by
  (scenario hash, command, toolkit version), checksummed on read.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bd
from .assembly import AssembledSpectrum, assemble, negative_moment, riesz_mean
from .model import GROWING, Scenario, validate_scenario
from .oracles import cartesian_2d_spectrum

CACHE_ENV = "MAGDISK_CACHE_DIR"
SWEEP_AXES = ("epsilon", "alpha", "sigma", "Lambda", "N")

DEFAULT_INEQUALITIES = (
    bd.BEREZIN, bd.LAPTEV, bd.LIEB_THIRRING, bd.MAGNETIC_LT, bd.MAIN_THEOREM,
    bd.CHANNEL_LOWER_BOUND, bd.HALF_LINE, bd.GROUND_STATE,
)


def plain(obj):
    """JSON-ready copy with numpy scalars and arrays turned into Python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


@dataclass
class ResultRecord:
    scenario_hash: str
    command: str
    version: str
    scenario: dict
    spectrum: dict | None = None
    moments: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    oracles: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def payload(self) -> dict:
        """Every numeric field; reproducible bit-for-bit for a fixed scenario and version."""
        return plain({
            "scenario_hash": self.scenario_hash,
            "command": self.command,
            "version": self.version,
            "scenario": self.scenario,
            "spectrum": self.spectrum,
            "moments": self.moments,
            "bounds": self.bounds,
            "oracles": self.oracles,
            "skipped": self.skipped,
        })

    def to_dict(self, include_metadata: bool = True) -> dict:
        d = self.payload()
        if include_metadata:
            d["metadata"] = plain(self.metadata)
        return d

    @classmethod
    def from_payload(cls, d: dict, metadata=None) -> "ResultRecord":
        return cls(d["scenario_hash"], d["command"], d["version"], d["scenario"], d.get("spectrum"),
                   d.get("moments", []), d.get("bounds", []), d.get("oracles", []), d.get("skipped", []),
                   dict(metadata or {}))

    def worst_verdict(self) -> str:
        verdicts = {b["verdict"] for b in self.bounds}
        for v in ("violated", "violated_within_tolerance"):
            if v in verdicts:
                return v
        return "holds"


# ---------------------------------------------------------------------------
# spectrum cache (in memory)


class SpectrumCache:
    """Assembled spectra keyed by spectral hash; a stored spectrum serves any lower threshold."""

    def __init__(self):
        self._store: dict[str, AssembledSpectrum] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _lock(self, key):
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def get(self, scenario: Scenario, threshold: float, assemble_threshold: float | None = None):
        """Spectrum of ``scenario`` complete up to ``threshold``; assembles at ``assemble_threshold`` on a miss."""
        key = scenario.spectral_hash
        with self._lock(key):
            sp = self._store.get(key)
            if sp is not None and sp.threshold >= threshold:
                with self._guard:
                    self.hits += 1
                return sp, True
            target = max(threshold, assemble_threshold if assemble_threshold is not None else threshold)
            sp = assemble(scenario, target)
            self._store[key] = sp
            with self._guard:
                self.misses += 1
            return sp, False

    def clear(self):
        with self._guard:
            self._store.clear()
            self.hits = self.misses = 0

    def stats(self) -> dict:
        return {"hits": self.hits, "misses": self.misses, "entries": len(self._store)}


SPECTRA = SpectrumCache()


# ---------------------------------------------------------------------------
# record cache (on disk)


class ResultCache:
    """Content-addressed directory of result records, one checksummed JSON file per key."""

    def __init__(self, root=None):
        root = root or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "magdisk"
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    @staticmethod
    def key(scenario_hash: str, command: str, version: str = __version__) -> str:
        text = json.dumps([scenario_hash, command, version])
        return hashlib.sha256(text.encode()).hexdigest()[:32]

    def _path(self, key):
        return self.root / f"{key}.json"

    def lock(self, key):
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def load(self, scenario_hash: str, command: str, version: str = __version__):
        path = self._path(self.key(scenario_hash, command, version))
        if not path.exists():
            return None
        try:
            wrapper = json.loads(path.read_text())
            body = wrapper["payload"]
            text = json.dumps(body, sort_keys=True)
            if hashlib.sha256(text.encode()).hexdigest() != wrapper["checksum"]:
                raise ValueError("checksum mismatch")
            if (body["scenario_hash"], body["command"], body["version"]) != (scenario_hash, command, version):
                raise ValueError("key mismatch")
        except (ValueError, KeyError, TypeError) as exc:
            warnings.warn(f"cache entry {path.name} is corrupt ({exc}); recomputing", RuntimeWarning, stacklevel=2)
            return None
        return ResultRecord.from_payload(body)

    def store(self, record: ResultRecord):
        key = self.key(record.scenario_hash, record.command, record.version)
        body = record.payload()
        text = json.dumps(body, sort_keys=True)
        wrapper = {"checksum": hashlib.sha256(text.encode()).hexdigest(), "payload": body}
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self._path(key).with_suffix(f".tmp{threading.get_ident()}")
        tmp.write_text(json.dumps(wrapper, sort_keys=True))
        os.replace(tmp, self._path(key))

    def entries(self) -> list[dict]:
        if not self.root.exists():
            return []
        out = []
        for path in sorted(self.root.glob("*.json")):
            try:
                body = json.loads(path.read_text())["payload"]
                out.append({"key": path.stem, "scenario_hash": body["scenario_hash"], "command": body["command"],
                            "version": body["version"], "bytes": path.stat().st_size})
            except (ValueError, KeyError):
                out.append({"key": path.stem, "scenario_hash": "?", "command": "?", "version": "?",
                            "bytes": path.stat().st_size})
        return out

    def clear(self) -> int:
        n = 0
        for path in self.root.glob("*.json") if self.root.exists() else []:
            path.unlink()
            n += 1
        return n


def _cached(command: str, scenario: Scenario, compute, cache: ResultCache | None):
    if cache is None:
        rec = compute()
        rec.metadata["cache"] = "disabled"
        return rec
    key = cache.key(scenario.content_hash, command)
    with cache.lock(key):
        rec = cache.load(scenario.content_hash, command)
        if rec is not None:
            rec.metadata.update({"cache": "hit", "timestamp": time.time()})
            return rec
        rec = compute()
        cache.store(rec)
        rec.metadata["cache"] = "miss"
        return rec


# ---------------------------------------------------------------------------
# commands


def _record(scenario: Scenario, command: str) -> ResultRecord:
    return ResultRecord(scenario.content_hash, command, __version__, scenario.to_dict(),
                        metadata={"timestamp": time.time(), "timings": {}})


def _timed(rec, name, fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    rec.metadata["timings"][name] = time.perf_counter() - t
    return out


def run_spectrum(scenario: Scenario, lam: float | None = None, cache: ResultCache | None = None,
                 spectra: SpectrumCache | None = SPECTRA) -> ResultRecord:
    """Assembled spectrum up to Λ with the Riesz mean at Λ and the negative moment."""
    validate_scenario(scenario)
    if lam is not None:
        scenario = scenario.with_params(lambda_shift=float(lam))
    lam = scenario.params.lambda_shift
    sigma = scenario.params.sigma

    def compute():
        rec = _record(scenario, "spectrum")
        sp = _timed(rec, "assemble", _spectrum, scenario, lam, spectra)
        rec.spectrum = _restrict(sp, lam).to_dict()
        rec.moments = [riesz_mean(sp, lam, sigma).to_dict(), negative_moment(sp, sigma).to_dict(),
                       riesz_mean(sp, lam, 0.0).to_dict()]
        return rec

    return _cached("spectrum", scenario, compute, cache)


def _spectrum(scenario, threshold, spectra, assemble_threshold=None):
    if spectra is None:
        return assemble(scenario, max(threshold, assemble_threshold or threshold))
    return spectra.get(scenario, threshold, assemble_threshold)[0]


def _restrict(sp: AssembledSpectrum, threshold: float) -> AssembledSpectrum:
    # a cached spectrum may extend past this command's threshold
    keep = [e for e in sp.entries if e.eigenvalue <= threshold + sp.abs_tol]
    return dataclasses.replace(sp, entries=keep, threshold=threshold)


def _ground_state(scenario: Scenario, spectra) -> tuple[float, float]:
    """Lowest eigenvalue with its error estimate, raising the threshold until one is found."""
    K = scenario.field.K if scenario.regime == GROWING else 0.0
    t = K - scenario.potential.sup_norm(scenario.r0) + 1.0
    for _ in range(60):
        sp = _spectrum(scenario, t, spectra)
        inside = [e for e in sp.entries if e.eigenvalue <= t]
        if inside:
            e = inside[0]
            return e.eigenvalue, e.error_estimate + sp.abs_tol
        t += max(1.0, abs(t))
    raise RuntimeError("no eigenvalue found while searching for the ground state")


def resolve_inequalities(names) -> tuple:
    if names is None:
        return DEFAULT_INEQUALITIES
    out = []
    for n in names:
        match = [i for i in bd.INEQUALITIES if i.lower() == n.strip().lower()]
        if not match:
            raise ValueError(f"unknown inequality '{n}' (choose from {', '.join(bd.INEQUALITIES)})")
        out.append(match[0])
    return tuple(dict.fromkeys(out))


def verify_bounds(scenario: Scenario, inequalities=None, spectra: SpectrumCache | None = SPECTRA,
                  assemble_threshold: float | None = None, timings: dict | None = None):
    """Bound reports (as dicts) and skip reasons for the requested inequality set.

    With ``inequalities`` None every applicable inequality is evaluated and
    inapplicable ones are skipped silently; an explicit request records a
    reason for each skip.
    """
    requested = resolve_inequalities(inequalities)
    explicit = inequalities is not None
    if not explicit and scenario.params.remark3_mode:
        requested = requested + (bd.REMARK3,)
    p = scenario.params
    lam, sigma = p.lambda_shift, p.sigma
    reports, skipped = [], []
    timings = timings if timings is not None else {}

    def skip(name, reason):
        skipped.append({"inequality": name, "reason": reason})

    t0 = time.perf_counter()
    sp = _spectrum(scenario, max(lam, 0.0), spectra, assemble_threshold)
    timings["spectrum"] = time.perf_counter() - t0

    semiclassical = bd.LAPTEV if sigma < 1 else bd.BEREZIN
    for name in requested:
        t = time.perf_counter()
        if name in (bd.BEREZIN, bd.LAPTEV):
            if name != semiclassical:
                if explicit:
                    skip(name, f"σ = {sigma} selects the {semiclassical} variant")
                continue
            reason = bd.semiclassical_applicability(scenario, sigma, name)
            if reason:
                skip(name, reason)
                continue
            reports.append(bd.berezin_report(scenario, sp, lam, sigma))
        elif name in (bd.LIEB_THIRRING, bd.MAGNETIC_LT):
            reason = bd.semiclassical_applicability(scenario, sigma, name)
            if reason:
                if explicit or "σ" in reason:
                    skip(name, reason)
                continue
            reports.append(bd.lt_report(scenario, sp, sigma))
        elif name == bd.MAIN_THEOREM:
            reports.append(bd.main_theorem_report(scenario, sp))
        elif name == bd.CHANNEL_LOWER_BOUND:
            if p.epsilon > 0.75:
                skip(name, "channel lower bound needs ε ≤ 3/4")
                continue
            reports.append(bd.channel_lower_bound_report(scenario, sp))
        elif name == bd.HALF_LINE:
            hl = bd.half_line_reports(scenario)
            if hl[0].details["n_mu"] == 0:
                skip(name, "no negative spectrum of the auxiliary operator")
                continue
            reports += hl
        elif name == bd.GROUND_STATE:
            if scenario.regime != GROWING:
                skip(name, "ground-state bound applies in the growing-field regime only")
                continue
            lam1, tol = _ground_state(scenario, spectra)
            reports.append(bd.ground_state_lower_bound(scenario, lam1, tol))
        elif name == bd.REMARK3:
            reports.append(bd.remark3_feasibility(scenario))
        timings[name] = time.perf_counter() - t
    return [r.to_dict() for r in reports], skipped, sp


def run_verify(scenario: Scenario, inequalities=None, cache: ResultCache | None = None,
               spectra: SpectrumCache | None = SPECTRA, assemble_threshold: float | None = None,
               oracle_count: int = 4) -> ResultRecord:
    """Evaluate the requested inequalities on ``scenario`` (all applicable ones by default)."""
    validate_scenario(scenario)
    requested = resolve_inequalities(inequalities)
    command = "verify:" + ("default" if inequalities is None else ",".join(requested))

    def compute():
        rec = _record(scenario, command)
        reports, skipped, sp = verify_bounds(scenario, inequalities, spectra, assemble_threshold,
                                             rec.metadata["timings"])
        rec.bounds, rec.skipped = reports, skipped
        lam = max(scenario.params.lambda_shift, 0.0)
        rec.spectrum = _restrict(sp, lam).to_dict()
        rec.moments = [riesz_mean(sp, scenario.params.lambda_shift, scenario.params.sigma).to_dict(),
                       negative_moment(sp, scenario.params.sigma).to_dict()]
        if scenario.numerics.oracle_2d:
            res = _timed(rec, "oracle_2d", cartesian_2d_spectrum, scenario, oracle_count)
            rec.oracles.append(res.to_dict())
        return rec

    return _cached(command, scenario, compute, cache)


def sweep_points(template: Scenario, axis: str, values) -> list[Scenario]:
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis '{axis}' (choose from {', '.join(SWEEP_AXES)})")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if axis == "N":
        return [template.with_grid(int(v)) for v in values]
    key = "lambda_shift" if axis == "Lambda" else axis
    return [template.with_params(**{key: float(v)}) for v in values]


def run_sweep(template: Scenario, axis: str, values, inequalities=None, workers: int = 1,
              cache: ResultCache | None = None, spectra: SpectrumCache | None = None) -> list[ResultRecord]:
    """One verify record per value of ``axis``, in input order.

    Points that share a spectrum (every axis except N) reuse a single
    assembly done at the largest Λ of the sweep.
    """
    points = sweep_points(template, axis, values)
    for sc in points:
        validate_scenario(sc)
    spectra = spectra if spectra is not None else SpectrumCache()
    top = max(max(sc.params.lambda_shift, 0.0) for sc in points)

    def one(sc):
        return run_verify(sc, inequalities, cache, spectra, assemble_threshold=top)

    if workers <= 1:
        records = [one(sc) for sc in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, points))
    for rec, v in zip(records, values):
        rec.metadata["sweep"] = {"axis": axis, "value": v, "spectrum_cache": spectra.stats()}
    return records


def exit_code(records) -> int:
    """0 when no report is violated beyond tolerance, 2 otherwise."""
    return 2 if any(r.worst_verdict() == "violated" for r in records) else 0
