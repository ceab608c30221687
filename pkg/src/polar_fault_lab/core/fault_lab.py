# polar_fault_lab/core/fault_lab.py

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .analysis.bounds import (
    CovarianceMatrix,
    FerBounds,
    bounds_grid,
    compute_covariance,
    fer_bounds,
)
from .analysis.construction import (
    CodeSpec,
    InfoSet,
    ProtectionReport,
    k_from_rate,
    protection_report,
    select_info_set,
)
from .analysis.optimizer import BlocklengthDecision, optimal_blocklength
from .analysis.polarization import ZTable, compute_z_table
from .errors import ConfigError
from .simulation.montecarlo import (
    BoundsValidation,
    FerEstimate,
    estimate_fer,
    resolve_workers,
    validate_bounds,
)


@dataclass
class LabMetrics:
    """Counters for monitoring the work a lab has done"""
    tables_built: int = 0
    matrices_built: int = 0
    cache_hits: int = 0
    simulations: int = 0
    frames_simulated: int = 0
    frame_erasures: int = 0

    @property
    def erasure_rate(self) -> float:
        return self.frame_erasures / self.frames_simulated if self.frames_simulated > 0 else 0


class FaultLab:
    """Main interface for analysing and simulating polar codes under faulty decoding"""

    DEFAULT_SETTINGS = {
        'p': 0.5,
        'delta': 1e-6,
        'n_max_bounds': 13,
        'target_erasures': 200,
        'batch_size': 512,
        'trials': 100000,
        'seed': 0,
        'engine': 'indicator',
    }

    def __init__(
        self,
        settings: Optional[Dict[str, Any]] = None,
        max_workers: Optional[int] = None,
        cache_enabled: bool = True,
        cache_size: int = 16,
        log_file: Optional[str] = None,
        metrics_enabled: bool = True,
    ):
        self.settings = dict(self.DEFAULT_SETTINGS)
        self._apply_settings(settings or {})
        self.max_workers = resolve_workers(max_workers)
        self.cache_enabled = cache_enabled
        self.cache = {} if cache_enabled else None
        self.cache_size = cache_size
        self._cache_lock = threading.Lock()
        self.metrics_enabled = metrics_enabled
        self.metrics = LabMetrics() if metrics_enabled else None

        self.logger = self._setup_logging(log_file)
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)

        self.logger.debug(f"FaultLab initialized: {self.settings}, workers={self.max_workers}")

    def _setup_logging(self, log_file: Optional[str]) -> logging.Logger:
        logger = logging.getLogger('polar_fault_lab')
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        if not any(getattr(h, '_polar_fault_lab', False) for h in logger.handlers):
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(formatter)
            console_handler._polar_fault_lab = True
            logger.addHandler(console_handler)
            if logger.level == logging.NOTSET:
                logger.setLevel(logging.INFO)

        if log_file:
            file_handler = logging.FileHandler(log_file)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

    def _apply_settings(self, settings: Dict[str, Any]):
        unknown = sorted(set(settings) - set(self.DEFAULT_SETTINGS))
        if unknown:
            raise ConfigError(f"unknown settings: {unknown}")
        merged = {**self.settings, **settings}
        CodeSpec(0, 0, merged['p'], merged['delta'])
        if merged['engine'] not in ('indicator', 'decoder'):
            raise ConfigError(f"unknown engine {merged['engine']!r}")
        self.settings = merged

    # construction

    def spec(
        self,
        n: int,
        rate: Optional[float] = None,
        k: Optional[int] = None,
        protected_levels: int = 0,
        p: Optional[float] = None,
        delta: Optional[float] = None,
    ) -> CodeSpec:
        if (rate is None) == (k is None):
            raise ConfigError("give exactly one of rate or k")
        if k is None:
            k = k_from_rate(n, rate)
        return CodeSpec(
            n, k,
            self.settings['p'] if p is None else p,
            self.settings['delta'] if delta is None else delta,
            protected_levels,
        )

    def z_table(
        self,
        n: int,
        protected_levels: int = 0,
        p: Optional[float] = None,
        delta: Optional[float] = None,
    ) -> ZTable:
        p = self.settings['p'] if p is None else p
        delta = self.settings['delta'] if delta is None else delta
        key = ('z', n, p, delta, protected_levels)
        cached = self._cache_get(key)
        if cached is not None:
            return cached
        table = compute_z_table(n, p, delta, protected_levels)
        if self.metrics_enabled:
            self.metrics.tables_built += 1
        self._update_cache(key, table)
        return table

    def construct(self, spec: CodeSpec) -> Tuple[ZTable, InfoSet]:
        z = self.z_table(spec.n, spec.protected_levels, spec.p, spec.delta)
        return z, select_info_set(z, spec.k)

    def protection(self, n: int, n_p: int) -> ProtectionReport:
        return protection_report(n, n_p, self.settings['p'], self.settings['delta'])

    # bounds

    def covariance(self, spec: CodeSpec) -> CovarianceMatrix:
        key = ('cov', spec.n, spec.p, spec.delta, spec.protected_levels)
        cached = self._cache_get(key)
        if cached is not None:
            return cached
        cov = compute_covariance(spec, self.settings['n_max_bounds'], self.max_workers)
        if self.metrics_enabled:
            self.metrics.matrices_built += 1
        self._update_cache(key, cov)
        return cov

    def bounds(self, spec: CodeSpec, info: Optional[InfoSet] = None) -> FerBounds:
        z, default_info = self.construct(spec)
        info = default_info if info is None else info
        cov = self.covariance(spec) if info.K > 1 else None
        return fer_bounds(spec, info, z=z, cov=cov)

    def sweep_rates(
        self, n: int, rates: Sequence[float], protected_levels: int = 0
    ) -> List[Tuple[float, FerBounds]]:
        spec = self.spec(n, k=0, protected_levels=protected_levels)
        z = self.z_table(n, protected_levels)
        needs_cov = any(k_from_rate(n, r) > 1 for r in rates)
        cov = self.covariance(spec) if needs_cov else None
        results = []
        for rate in rates:
            info = select_info_set(z, k_from_rate(n, rate))
            results.append((rate, fer_bounds(spec.replace(k=info.K), info, z=z, cov=cov)))
        return results

    def sweep_blocklengths(
        self, rate: float, n_values: Sequence[int], protected_levels: int = 0
    ) -> List[Tuple[int, FerBounds]]:
        grid = bounds_grid(
            [rate], n_values, self.settings['p'], self.settings['delta'], protected_levels,
            self.settings['n_max_bounds'], max_workers=self.max_workers,
        )
        return [(n, grid[(rate, n)]) for n in sorted(set(n_values))]

    def uep_sweep(
        self, n: int, rates: Sequence[float], protected_values: Optional[Sequence[int]] = None
    ) -> List[Dict[str, Any]]:
        """Upper bounds per rate for each number of protected levels, with hardware columns"""
        protected_values = range(n + 2) if protected_values is None else protected_values
        futures = {
            n_p: self.executor.submit(self.sweep_rates, n, rates, n_p) for n_p in protected_values
        }
        rows = []
        for n_p, future in futures.items():
            report = self.protection(n, n_p)
            for rate, b in future.result():
                rows.append({
                    'n': n,
                    'n_p': n_p,
                    'rate': rate,
                    'upper': b.upper,
                    'lower': b.lower,
                    'n_u': report.n_u,
                    'protected_units': report.protected_units,
                    'total_units': report.total_units,
                    'fraction': report.fraction,
                    'rate_loss': report.rate_loss,
                })
        return rows

    # simulation

    def simulate(
        self,
        spec: CodeSpec,
        info: Optional[InfoSet] = None,
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        **overrides: Any,
    ) -> FerEstimate:
        if info is None:
            _, info = self.construct(spec)
        estimate = estimate_fer(
            spec,
            self.settings['trials'] if trials is None else trials,
            self.settings['seed'] if seed is None else seed,
            info=info,
            **self._simulation_options(overrides),
        )
        self._update_metrics(estimate)
        return estimate

    def validate(
        self,
        spec: CodeSpec,
        info: Optional[InfoSet] = None,
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        **overrides: Any,
    ) -> BoundsValidation:
        if info is None:
            _, info = self.construct(spec)
        report = validate_bounds(
            spec,
            info,
            self.settings['trials'] if trials is None else trials,
            self.settings['seed'] if seed is None else seed,
            n_max=self.settings['n_max_bounds'],
            **self._simulation_options(overrides),
        )
        self._update_metrics(report.estimate)
        self.logger.info(f"Bounds validation: {report}")
        return report

    def optimize(
        self,
        rate: float,
        n_max: int,
        mc_budget: Optional[int] = None,
        seed: Optional[int] = None,
        protected_levels: int = 0,
    ) -> BlocklengthDecision:
        options = self._simulation_options({})
        options.pop('target_erasures')
        decision = optimal_blocklength(
            rate,
            self.settings['p'],
            self.settings['delta'],
            n_max,
            mc_budget=self.settings['trials'] if mc_budget is None else mc_budget,
            seed=self.settings['seed'] if seed is None else seed,
            protected_levels=protected_levels,
            n_max_bounds=self.settings['n_max_bounds'],
            **options,
        )
        self.logger.info(f"Optimizer decision for R={rate}: {decision}")
        return decision

    def _simulation_options(self, overrides: Dict[str, Any]) -> Dict[str, Any]:
        options = {
            'target_erasures': self.settings['target_erasures'],
            'engine': self.settings['engine'],
            'batch_size': self.settings['batch_size'],
            'max_workers': self.max_workers,
        }
        options.update(overrides)
        return options

    # bookkeeping

    def get_metrics(self) -> Dict[str, Any]:
        if not self.metrics_enabled:
            return {}

        return {
            'tables_built': self.metrics.tables_built,
            'matrices_built': self.metrics.matrices_built,
            'cache_hits': self.metrics.cache_hits,
            'simulations': self.metrics.simulations,
            'frames_simulated': self.metrics.frames_simulated,
            'frame_erasures': self.metrics.frame_erasures,
            'erasure_rate': self.metrics.erasure_rate,
            'cache_size': len(self.cache) if self.cache_enabled else 0,
        }

    def reset_metrics(self):
        if self.metrics_enabled:
            self.metrics = LabMetrics()

    def _cache_get(self, key: Tuple) -> Any:
        if not self.cache_enabled:
            return None
        with self._cache_lock:
            value = self.cache.get(key)
        if value is not None:
            self.logger.debug(f"Cache hit for {key}")
            if self.metrics_enabled:
                self.metrics.cache_hits += 1
        return value

    def _update_cache(self, key: Tuple, value: Any):
        if not self.cache_enabled:
            return
        with self._cache_lock:
            if len(self.cache) >= self.cache_size:
                first_key = next(iter(self.cache))
                del self.cache[first_key]

            self.cache[key] = value

    def _update_metrics(self, estimate: FerEstimate):
        if self.metrics_enabled:
            self.metrics.simulations += 1
            self.metrics.frames_simulated += estimate.trials
            self.metrics.frame_erasures += estimate.erasures

    def save_config(self, path: str):
        with open(path, 'w') as f:
            json.dump({'settings': self.settings}, f, indent=2)

    def load_config(self, path: str):
        try:
            with open(path, 'r') as f:
                config = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(config, dict) or not isinstance(config.get('settings', {}), dict):
            raise ConfigError(f"config file {path} must hold a 'settings' object")

        self.load_settings(config.get('settings', {}))

    def load_settings(self, settings: Dict[str, Any]):
        self._apply_settings(settings)
        if self.cache_enabled:
            with self._cache_lock:
                self.cache.clear()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.executor:
            self.executor.shutdown(wait=True)
