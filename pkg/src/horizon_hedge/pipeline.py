"""Configuration-driven batch run: ingest, diagnose, estimate, scale, hedge, evaluate.

Config schema (YAML; relative paths resolve against the config file)::

    assets:                       # one or more cash/futures pairs
      - label: FTSE
        cash: data/ftse_cash.csv
        futures: data/ftse_futures.csv
    horizons: [1, 5, 20]          # base horizon 1 is always included
    split_date: 2003-03-17        # estimation sample = dates <= split_date
    alpha: 0.01                   # tail probability for VaR / CVaR
    n_resamples: 2000             # bootstrap resamples per difference test
    seed: 20090801                # mandatory
    block_lengths: {1: 50, 5: 20, 20: 10}
    kappa: sample                 # or a number, or {LABEL: [k_cash, k_futures]}
    lm_lags: 4
    refit_every: null             # out-of-sample re-estimation period (null = fixed params)
    jobs: 1                       # assets processed in parallel
    output_dir: out

Every emitted file is listed in ``manifest.json`` with the operation that
produced it and its SHA-256, next to the config hash, seed and version.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, data, diagnostics, effectiveness, garch, hedging, scaling
from .errors import ConfigError, HedgeError, NoRealRoot, PipelineError

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_LENGTHS = {1: 50, 5: 20, 20: 10}
ARTIFACTS = {
    "table1_diagnostics": "diagnostics.moments/jarque_bera/engle_lm/kpss/correlation",
    "table2_garch": "garch.estimate + scaling.dn_aggregate_vech",
    "table3_ohr": "hedging.garch_hedge/scaled_hedge/ols_hedge",
    "table4_insample": "effectiveness.risk_measures/effectiveness (in-sample)",
    "table5_insample_tests": "effectiveness.block_effectiveness/bootstrap_diff_test (in-sample)",
    "table6_outsample": "effectiveness.risk_measures/effectiveness (out-of-sample)",
    "table7_outsample_tests": "effectiveness.block_effectiveness/bootstrap_diff_test (out-of-sample)",
}
STAGE_TABLES = {
    "diagnose": ["table1_diagnostics"],
    "estimate": ["table2_garch"],
    "scale": ["table2_garch"],
    "hedge": ["table3_ohr"],
    "evaluate": ["table4_insample", "table5_insample_tests", "table6_outsample",
                 "table7_outsample_tests"],
}


@dataclass
class AssetConfig:
    label: str
    cash: Path
    futures: Path


@dataclass
class RunConfig:
    assets: list[AssetConfig]
    split_date: str
    seed: int
    horizons: list[int] = field(default_factory=lambda: [1, 5, 20])
    alpha: float = 0.01
    n_resamples: int = 2000
    block_lengths: dict[int, int] = field(default_factory=lambda: dict(DEFAULT_BLOCK_LENGTHS))
    kappa: object = "sample"
    lm_lags: int = 4
    refit_every: int | None = None
    jobs: int = 1
    output_dir: Path = Path("out")

    def validate(self) -> "RunConfig":
        if not self.assets:
            raise ConfigError("config lists no assets")
        if not self.horizons or any(int(h) < 1 for h in self.horizons):
            raise ConfigError("horizons must be a non-empty list of positive integers")
        self.horizons = sorted({1, *(int(h) for h in self.horizons)})
        if not 0 < float(self.alpha) < 0.5:
            raise ConfigError("alpha must lie in (0, 0.5)")
        if self.seed is None:
            raise ConfigError("seed is required")
        self.seed = int(self.seed)
        if int(self.n_resamples) < 10:
            raise ConfigError("n_resamples must be at least 10")
        try:
            data.as_date(self.split_date)
        except ValueError as exc:
            raise ConfigError(f"bad split_date {self.split_date!r}") from exc
        self.block_lengths = {int(k): int(v) for k, v in self.block_lengths.items()}
        labels = [a.label for a in self.assets]
        if len(set(labels)) != len(labels):
            raise ConfigError("asset labels must be unique")
        return self

    def block_len(self, h: int) -> int:
        return self.block_lengths.get(h, max(5, 50 // h))

    def kappa_for(self, label: str):
        k = self.kappa
        if k in (None, "sample"):
            return None
        if isinstance(k, dict):
            v = k.get(label)
            return None if v is None else (float(v[0]), float(v[1]))
        return (float(k), float(k))

    def canonical(self) -> dict:
        d = asdict(self)
        d["assets"] = [{"label": a.label, "cash": str(a.cash), "futures": str(a.futures)}
                       for a in self.assets]
        d["output_dir"] = str(self.output_dir)
        d["split_date"] = str(self.split_date)
        d["block_lengths"] = {str(k): v for k, v in sorted(self.block_lengths.items())}
        return d

    def digest(self) -> str:
        payload = self.canonical()
        payload.pop("output_dir")
        payload.pop("jobs")
        for a in payload["assets"]:
            a["cash"] = _sha256_file(Path(a["cash"])) if Path(a["cash"]).is_file() else a["cash"]
            a["futures"] = (_sha256_file(Path(a["futures"])) if Path(a["futures"]).is_file()
                            else a["futures"])
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw, base_dir=path.parent, overrides=overrides)


def config_from_dict(raw: dict, base_dir=".", overrides: dict | None = None) -> RunConfig:
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    base_dir = Path(base_dir)

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else Path(os.path.normpath(base_dir / p))

    try:
        assets = [AssetConfig(str(a["label"]), resolve(a["cash"]), resolve(a["futures"]))
                  for a in raw.get("assets", [])]
        cfg = RunConfig(
            assets=assets,
            split_date=str(raw["split_date"]),
            seed=raw.get("seed"),
            horizons=list(raw.get("horizons", [1, 5, 20])),
            alpha=float(raw.get("alpha", 0.01)),
            n_resamples=int(raw.get("n_resamples", 2000)),
            block_lengths=dict(raw.get("block_lengths") or DEFAULT_BLOCK_LENGTHS),
            kappa=raw.get("kappa", "sample"),
            lm_lags=int(raw.get("lm_lags", 4)),
            refit_every=raw.get("refit_every"),
            jobs=int(raw.get("jobs", 1)),
            output_dir=resolve(raw.get("output_dir", "out")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    return cfg.validate()


# ---------------------------------------------------------------------------
# Per-asset analysis
# ---------------------------------------------------------------------------


def _stage(stage, asset, h=None):
    """Decorator-free context helper: wrap module errors with coordinates."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, HedgeError) and not isinstance(exc, PipelineError):
                raise PipelineError(stage, exc, asset, h) from exc
            return False

    return _Ctx()


class AssetAnalysis:
    """All intermediate results for one cash/futures pair."""

    def __init__(self, asset: AssetConfig, cfg: RunConfig, index: int = 0):
        self.asset = asset
        self.cfg = cfg
        self.index = index
        label = asset.label
        with _stage("ingest", label):
            cash = data.load_prices(asset.cash, label=f"{label}-cash", role="cash")
            fut = data.load_prices(asset.futures, label=f"{label}-futures", role="futures")
            self.base = data.pair_from_prices(cash, fut)
        self.pairs: dict[int, data.AlignedPair] = {}
        self.splits: dict[int, data.SampleSplit] = {}
        for h in cfg.horizons:
            with _stage("ingest", label, h):
                self.pairs[h] = data.aggregate_pair(self.base, h)
                self.splits[h] = data.split(self.pairs[h], cfg.split_date)
        self._fits: dict[int, garch.EstimationResult] = {}
        self._paths: dict[int, garch.CovariancePath] = {}

    @property
    def label(self) -> str:
        return self.asset.label

    def est(self, h):
        return self.splits[h].estimation

    def hold(self, h):
        return self.splits[h].holdout

    def _seed(self, *parts) -> int:
        ss = np.random.SeedSequence([self.cfg.seed, self.index, *parts])
        return int(ss.generate_state(1)[0])

    # -- estimation ----------------------------------------------------------

    def fit(self, h) -> garch.EstimationResult:
        if h not in self._fits:
            with _stage("estimate", self.label, h):
                self._fits[h] = garch.estimate(self.est(h), seed=self._seed(h, 0))
        return self._fits[h]

    def path(self, h) -> garch.CovariancePath:
        if h not in self._paths:
            self._paths[h] = garch.filter_vech(self.est(h), self.fit(h).params)
        return self._paths[h]

    def kappas(self) -> tuple[float, float]:
        override = self.cfg.kappa_for(self.label)
        if override is not None:
            return override
        est = self.est(1)
        return (diagnostics.raw_kurtosis(est.cash.returns - est.cash.returns.mean()),
                diagnostics.raw_kurtosis(est.futures.returns - est.futures.returns.mean()))

    def scaled_params(self, h) -> dict[str, scaling.DnOutput | NoRealRoot]:
        base = self.fit(1).params
        ks, kf = self.kappas()
        kap = {"s": ks, "f": kf, "sf": 0.5 * (ks + kf)}
        out = {}
        with _stage("scale", self.label, h):
            for eq in garch.EQUATIONS:
                try:
                    out[eq] = scaling.dn_aggregate(base.triple(eq), kap[eq], h)
                except NoRealRoot as exc:
                    logger.warning("%s h=%d equation %s: %s", self.label, h, eq, exc)
                    out[eq] = exc
        return out

    # -- hedges --------------------------------------------------------------

    def hedges_in(self, h) -> dict[str, hedging.HedgePath]:
        with _stage("hedge", self.label, h):
            est = self.est(h)
            out = {"ols": hedging.ols_hedge(est), "garch": hedging.garch_hedge(self.path(h))}
            if h > 1:
                out["scaled-ols"] = hedging.scaled_hedge(hedging.ols_hedge(self.est(1)), est.dates, h)
                out["scaled-garch"] = hedging.scaled_hedge(
                    hedging.garch_hedge(self.path(1)), est.dates, h)
        return out

    def _daily_forecast_timeline(self) -> hedging.HedgePath:
        """Daily GARCH ratios over the whole sample, ex ante in the holdout."""
        in_path = hedging.garch_hedge(self.path(1))
        hold = self.hold(1)
        if len(hold) == 0:
            return in_path
        oos = hedging.garch_forecast_hedge(self.est(1), hold, self.fit(1).params,
                                           refit_every=self.cfg.refit_every)
        return hedging.HedgePath(np.concatenate([in_path.dates, oos.dates]),
                                 np.concatenate([in_path.ratios, oos.ratios]), "garch", 1)

    def hedges_out(self, h) -> dict[str, hedging.HedgePath]:
        hold = self.hold(h)
        with _stage("hedge", self.label, h):
            ols = hedging.ols_hedge(self.est(h))
            out = {
                "ols": hedging.constant_hedge(ols.ratios[0], hold.dates, "ols", h),
                "garch": hedging.garch_forecast_hedge(self.est(h), hold, self.fit(h).params,
                                                      refit_every=self.cfg.refit_every),
            }
            if h > 1:
                base_ols = hedging.ols_hedge(self.est(1))
                out["scaled-ols"] = hedging.scaled_hedge(
                    hedging.constant_hedge(base_ols.ratios[0], self.base.dates, "ols", 1),
                    hold.dates, h)
                out["scaled-garch"] = hedging.scaled_hedge(self._daily_forecast_timeline(),
                                                           hold.dates, h)
        return out


# ---------------------------------------------------------------------------
# Table builders: each returns (csv_rows, text)
# ---------------------------------------------------------------------------


def _f(x, nd):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "n/a"
    return f"{x:.{nd}f}"


def table1(an: AssetAnalysis):
    cfg = an.cfg
    header = ["horizon", "leg", "n", "mean_pct", "sd_pct", "sd_scaled_pct", "skewness", "p_skew",
              "excess_kurtosis", "p_kurt", "jb", "p_jb", "lm", "p_lm", "kpss_constant",
              "kpss_trend", "correlation"]
    rows = [header]
    base_sd = {}
    text = [f"Descriptive statistics: {an.label} (estimation sample; mean/SD in %)",
            f"{'':10s}{'h':>4s} {'mean':>8s} {'SD':>7s} {'SDscl':>7s} {'skew':>14s} "
            f"{'kurt':>14s} {'J-B':>18s} {'LM':>16s} {'KPSS-c':>7s} {'KPSS-t':>7s} {'corr':>6s}"]
    for h in cfg.horizons:
        est = an.est(h)
        with _stage("diagnose", an.label, h):
            corr = diagnostics.correlation(est)
            for leg, series in (("cash", est.cash), ("futures", est.futures)):
                m = diagnostics.moments(series)
                jb = diagnostics.jarque_bera(series)
                lm = diagnostics.engle_lm(series, cfg.lm_lags)
                kc = diagnostics.kpss(series, "constant")
                kt = diagnostics.kpss(series, "trend")
                if h == 1:
                    base_sd[leg] = m.sd_pct
                sd_scaled = scaling.sqrt_scale_sd(base_sd[leg], h) if h > 1 else math.nan
                rows.append([h, leg, m.n, m.mean_pct, m.sd_pct, sd_scaled, m.excess_skewness,
                             m.p_skew, m.excess_kurtosis, m.p_kurt, jb.statistic, jb.p_value,
                             lm.statistic, lm.p_value, kc.statistic, kt.statistic, corr])
                text.append(
                    f"{leg:10s}{h:>4d} {_f(m.mean_pct, 3):>8s} {_f(m.sd_pct, 2):>7s} "
                    f"{_f(sd_scaled, 2):>7s} {_f(m.excess_skewness, 3):>7s} ({_f(m.p_skew, 2)}) "
                    f"{_f(m.excess_kurtosis, 2):>7s} ({_f(m.p_kurt, 2)}) "
                    f"{_f(jb.statistic, 2):>11s} ({_f(jb.p_value, 2)}) "
                    f"{_f(lm.statistic, 2):>9s} ({_f(lm.p_value, 2)}) "
                    f"{_f(kc.statistic, 3):>7s} {_f(kt.statistic, 3):>7s} {_f(corr, 3):>6s}")
    cv = diagnostics.KPSS_CRITICAL_VALUES
    text.append(f"KPSS 1% critical values: constant {cv['constant']['1%']}, trend {cv['trend']['1%']}")
    text.append("Aggregation blocks are anchored at the last observation; a leading partial "
                "block is dropped.")
    return rows, "\n".join(text) + "\n"


def table2(an: AssetAnalysis, include_scaled: bool = True):
    cfg = an.cfg
    rows = [["column", "parameter", "estimate", "se", "robust_se", "note"]]
    columns = []
    for h in cfg.horizons:
        fit = an.fit(h)
        col = f"{h}-day" if h == 1 else f"{h}-day actual"
        columns.append(col)
        for name, est, se, rse in fit.rows():
            rows.append([col, name, est, se, rse, ""])
        for eq in ("s", "f", "sf"):
            rows.append([col, f"persistence_{eq}", fit.params.persistence(eq), "", "", ""])
        rows.append([col, "loglik", fit.loglik, "", "", "converged" if fit.converged
                     else "not-converged"])
    if include_scaled:
        ks, kf = an.kappas()
        for h in cfg.horizons:
            if h == 1:
                continue
            col = f"{h}-day scaled"
            columns.append(col)
            for eq, res in an.scaled_params(h).items():
                if isinstance(res, NoRealRoot):
                    for kind in ("omega", "alpha", "beta"):
                        rows.append([col, f"{kind}_{eq}", math.nan, "", "", "no-real-root"])
                    rows.append([col, f"persistence_{eq}", math.nan, "", "", "no-real-root"])
                    continue
                rows.append([col, f"omega_{eq}", res.omega_h, "", "", ""])
                rows.append([col, f"alpha_{eq}", res.alpha_h, "", "", ""])
                rows.append([col, f"beta_{eq}", res.beta_h, "", "", ""])
                rows.append([col, f"persistence_{eq}", res.persistence, "", "", ""])
        rows.append(["kappa", "kappa_s", ks, "", "", "sample" if cfg.kappa_for(an.label) is None
                     else "override"])
        rows.append(["kappa", "kappa_f", kf, "", "", ""])
        rows.append(["kappa", "kappa_sf", 0.5 * (ks + kf), "", "", "mean of legs"])

    # text rendering, 4 decimals like the published layout
    lookup = {(r[0], r[1]): r for r in rows[1:]}
    names = list(garch.PARAM_NAMES) + ["persistence_s", "persistence_f"]
    text = [f"GARCH(1,1) estimates: {an.label}  (robust SE in parentheses)",
            f"{'':16s}" + "".join(f"{c:>22s}" for c in columns)]
    for name in names:
        cells = []
        for c in columns:
            r = lookup.get((c, name))
            if r is None or (isinstance(r[2], float) and not math.isfinite(r[2])):
                cells.append(f"{'n/a':>22s}")
                continue
            est = r[2]
            val = f"{est:.4e}" if name.startswith("omega") else f"{est:.4f}"
            if r[4] != "":
                val += f" ({r[4]:.3g})" if name.startswith("omega") else f" ({r[4]:.3f})"
            cells.append(f"{val:>22s}")
        text.append(f"{name:16s}" + "".join(cells))
    if include_scaled:
        text.append(f"kurtosis used for aggregation: cash {ks:.4f}, futures {kf:.4f}, "
                    f"covariance {0.5 * (ks + kf):.4f}")
    return rows, "\n".join(text) + "\n"


def table3(an: AssetAnalysis):
    cfg = an.cfg
    rows = [["column", "model", "mean", "sd", "min", "max", "kpss_constant", "n"]]
    text = [f"Optimal hedge ratios: {an.label} (estimation sample)",
            f"{'':22s}{'mean':>8s}{'SD':>8s}{'min':>8s}{'max':>8s}{'KPSS':>8s}"]
    for h in cfg.horizons:
        paths = an.hedges_in(h)
        for key, hp in paths.items():
            col = f"{h}-day scaled" if key.startswith("scaled") else f"{h}-day actual"
            model = key.replace("scaled-", "")
            st = hp.stats()
            k = (diagnostics.kpss(hp.ratios, "constant").statistic
                 if model == "garch" and len(hp) >= 20 else math.nan)
            rows.append([col, model, st["mean"], st["sd"], st["min"], st["max"], k, st["n"]])
            text.append(f"{col + ' ' + model:22s}{_f(st['mean'], 3):>8s}{_f(st['sd'], 3):>8s}"
                        f"{_f(st['min'], 3):>8s}{_f(st['max'], 3):>8s}{_f(k, 3):>8s}")
    return rows, "\n".join(text) + "\n"


def _evaluate(an: AssetAnalysis, timing: str):
    cfg = an.cfg
    perf = [["horizon", "source", "model", "measure", "hedged", "unhedged", "he", "n"]]
    blocks = {}
    for h in cfg.horizons:
        pair = an.est(h) if timing == "in-sample" else an.hold(h)
        if len(pair) == 0:
            continue
        paths = an.hedges_in(h) if timing == "in-sample" else an.hedges_out(h)
        with _stage("evaluate", an.label, h):
            unhedged = effectiveness.risk_measures(pair.cash.returns, cfg.alpha, strict=False)
            for key, hp in paths.items():
                source = "scaled" if key.startswith("scaled") else "actual"
                model = key.replace("scaled-", "")
                hr = hedging.hedged_portfolio(pair, hp, timing)
                rm = effectiveness.risk_measures(hr.returns, cfg.alpha, strict=False)
                rep = effectiveness.effectiveness(rm, unhedged, h, key)
                for m in effectiveness.MEASURES:
                    perf.append([h, source, model, m, rm.get(m), unhedged.get(m), rep.get(m), rm.n])
                try:
                    blocks[(h, source, model)] = effectiveness.block_effectiveness(
                        hr.returns, pair.cash.returns, cfg.block_len(h), cfg.alpha)
                except HedgeError as exc:
                    logger.warning("%s h=%d %s: no block effectiveness (%s)", an.label, h, key, exc)
    tests = [["horizon", "model", "measure", "t_stat", "bootstrap_se", "significant_5pct",
              "mean_he_actual", "mean_he_scaled", "n_blocks"]]
    timing_id = 0 if timing == "in-sample" else 1
    for h in cfg.horizons:
        if h == 1:
            continue
        for mi, model in enumerate(("ols", "garch")):
            a, s = blocks.get((h, "actual", model)), blocks.get((h, "scaled", model))
            if a is None or s is None:
                continue
            for k, m in enumerate(effectiveness.MEASURES):
                with _stage("evaluate", an.label, h):
                    try:
                        dt = effectiveness.bootstrap_diff_test(
                            a.get(m), s.get(m), cfg.n_resamples,
                            seed=an._seed(h, 1 + timing_id, mi, k))
                    except HedgeError as exc:
                        logger.warning("%s h=%d %s %s: %s", an.label, h, model, m, exc)
                        continue
                tests.append([h, model, m, dt.t_stat, dt.bootstrap_se, int(dt.significant_5pct),
                              float(np.nanmean(a.get(m))), float(np.nanmean(s.get(m))),
                              dt.n_blocks])
    return perf, tests


def _perf_text(an, perf, timing):
    text = [f"Hedging performance ({timing}): {an.label}",
            "variance x1e-4, VaR/CVaR x1e-2 (loss units); effectiveness in brackets"]
    scale = {"variance": (1e4, 3), "var": (1e2, 2), "cvar": (1e2, 2)}
    for row in perf[1:]:
        h, source, model, m, hv, uv, he, n = row
        mult, nd = scale[m]
        text.append(f"{h:>3d}-day {source:7s}{model:6s}{m:9s}{_f(hv * mult, nd):>9s} "
                    f"({_f(he, 2)})  n={n}")
    return "\n".join(text) + "\n"


def _tests_text(an, tests, timing):
    text = [f"Actual vs scaled effectiveness, bootstrap t-statistics ({timing}): {an.label}",
            "* = not significant at 5%"]
    for row in tests[1:]:
        h, model, m, t, se, sig, *_ = row
        text.append(f"{h:>3d}-day {model:6s}{m:9s}{_f(t, 2):>9s}{'' if sig else '*'}")
    return "\n".join(text) + "\n"


def horizon_comparison(perf):
    """Effectiveness of actual hedges by horizon, with a monotonicity flag (reported only)."""
    rows = [["model", "measure", "horizons", "he_by_horizon", "increasing"]]
    by = {}
    for h, source, model, m, _, _, he, _ in perf[1:]:
        if source == "actual":
            by.setdefault((model, m), []).append((h, he))
    for (model, m), vals in sorted(by.items()):
        vals.sort()
        hes = [v for _, v in vals]
        inc = all(b > a for a, b in zip(hes, hes[1:]))
        rows.append([model, m, " ".join(str(h) for h, _ in vals),
                     " ".join(repr(float(v)) for v in hes), int(inc)])
    return rows


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _asset_outputs(an: AssetAnalysis, stages) -> dict[str, tuple[str, str]]:
    """Relative path -> (content, producing operation) for one asset."""
    out: dict[str, tuple[str, str]] = {}
    tables = []
    for st in stages:
        for t in STAGE_TABLES.get(st, []):
            if t not in tables:
                tables.append(t)
    lab = an.label

    def put(name, rows, text, op):
        out[f"{lab}/{name}.csv"] = (_csv_text(rows), op)
        out[f"{lab}/{name}.txt"] = (text, op)

    if "table1_diagnostics" in tables:
        put("table1_diagnostics", *table1(an), ARTIFACTS["table1_diagnostics"])
    if "table2_garch" in tables:
        rows, text = table2(an, include_scaled=("scale" in stages))
        put("table2_garch", rows, text, ARTIFACTS["table2_garch"])
        for h in an.cfg.horizons:
            out[f"{lab}/estimation_h{h}.txt"] = (an.fit(h).to_text(), "garch.estimate")
    if "table3_ohr" in tables:
        put("table3_ohr", *table3(an), ARTIFACTS["table3_ohr"])
        parts = ["date,ratio,kind,horizon,sample\n"]
        for timing, getter in (("in-sample", an.hedges_in), ("out-of-sample", an.hedges_out)):
            for h in an.cfg.horizons:
                if timing == "out-of-sample" and len(an.hold(h)) == 0:
                    continue
                for hp in getter(h).values():
                    body = hp.to_csv().split("\n", 1)[1]
                    parts.append("".join(line + f",{timing}\n" for line in body.splitlines()))
        out[f"{lab}/ohr_paths.csv"] = ("".join(parts), "hedging.HedgePath.to_csv")
    if "table4_insample" in tables:
        perf, tests = _evaluate(an, "in-sample")
        put("table4_insample", perf, _perf_text(an, perf, "in-sample"), ARTIFACTS["table4_insample"])
        put("table5_insample_tests", tests, _tests_text(an, tests, "in-sample"),
            ARTIFACTS["table5_insample_tests"])
        out[f"{lab}/horizon_comparison.csv"] = (_csv_text(horizon_comparison(perf)),
                                                "effectiveness.effectiveness (comparison)")
        perf_o, tests_o = _evaluate(an, "out-of-sample")
        put("table6_outsample", perf_o, _perf_text(an, perf_o, "out-of-sample"),
            ARTIFACTS["table6_outsample"])
        put("table7_outsample_tests", tests_o, _tests_text(an, tests_o, "out-of-sample"),
            ARTIFACTS["table7_outsample_tests"])
    return out


ALL_STAGES = ("diagnose", "estimate", "scale", "hedge", "evaluate")


def run(cfg: RunConfig, stages=ALL_STAGES) -> dict:
    """Execute ``stages`` for every asset and write the artifacts.

    Files are staged in a temporary directory and moved into place only when
    every asset succeeds; on failure nothing is left behind. Returns the
    manifest.
    """
    cfg.validate()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out_dir, prefix=".staging-"))
    try:
        def one(item):
            i, asset = item
            return _asset_outputs(AssetAnalysis(asset, cfg, i), stages)

        items = list(enumerate(cfg.assets))
        if cfg.jobs > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
                results = list(ex.map(one, items))
        else:
            results = [one(it) for it in items]
        files = {}
        for res in results:
            for rel, (content, op) in sorted(res.items()):
                _write(staging / rel, content)
                files[rel] = {"operation": op,
                              "sha256": hashlib.sha256(content.encode()).hexdigest()}
        manifest = {
            "software": {"name": "horizon_hedge", "version": __version__},
            "config_hash": cfg.digest(),
            "seed": cfg.seed,
            "stages": list(stages),
            "horizons": cfg.horizons,
            "aggregation": "blocks anchored at the last observation; leading partial block dropped",
            "files": dict(sorted(files.items())),
        }
        _write(staging / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        for p in sorted(staging.rglob("*")):
            if p.is_file():
                target = out_dir / p.relative_to(staging)
                target.parent.mkdir(parents=True, exist_ok=True)
                os.replace(p, target)
        return manifest
    finally:
        shutil.rmtree(staging, ignore_errors=True)
