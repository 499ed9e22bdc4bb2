"""Monthly aggregation and regression analytics.

Builds per-product monthly panels from scored reviews, then runs the
statistical layer on them: Pearson correlation, ordinary least squares
with full inference output, column standardization, PCA with a retained-
variance target, seeded train/test splitting, and the composed
principal-component regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ingest import EnrichedReview
from .special import chi2_sf, t_sf_two_sided, f_sf

__all__ = [
    "AnalyticsError", "SingularDesignError", "MonthlyPanelRow", "MonthlyPanel",
    "OlsFit", "PcaModel", "StandardizeResult", "PcRegressionResult",
    "build_monthly_panel", "pearson", "ols_fit", "standardize", "pca_fit",
    "train_test_split", "pc_regression", "format_ols_summary",
    "t_sf_two_sided", "chi2_sf",
]

PURCHASE_PROXIES = ("verified_sum", "review_count")

# Regression feature order for the monthly panel: mean sentiment, its
# square, the review-level feature means, then calendar position.
PANEL_FEATURES = (
    "sentiment_score_avg", "sentiment_score_squared", "review_length",
    "helpful_vote", "rating", "has_images", "weekday", "average_rating",
    "rating_number", "year", "month",
)


class AnalyticsError(ValueError):
    pass


class SingularDesignError(AnalyticsError):
    def __init__(self, columns: list[str]):
        super().__init__(f"design matrix is rank deficient; dependent columns: {columns}")
        self.columns = columns


@dataclass(frozen=True)
class MonthlyPanelRow:
    year: int
    month: int
    year_month: str
    sentiment_score_avg: float
    purchase_count: float
    features: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MonthlyPanel:
    asin: str
    purchase_proxy: str
    rows: tuple[MonthlyPanelRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        """Column by name; missing feature values surface as NaN."""
        if name in ("year", "month"):
            return np.array([getattr(r, name) for r in self.rows], dtype=float)
        if name in ("sentiment_score_avg", "purchase_count"):
            return np.array([getattr(r, name) for r in self.rows], dtype=float)
        vals = [r.features.get(name) for r in self.rows]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def feature_matrix(self, names: Sequence[str] = PANEL_FEATURES) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])

    def to_table(self) -> dict[str, list]:
        table: dict[str, list] = {
            "year_month": [r.year_month for r in self.rows],
            "sentiment_score_avg": [r.sentiment_score_avg for r in self.rows],
            "purchase_count": [r.purchase_count for r in self.rows],
        }
        feature_names = sorted({k for r in self.rows for k in r.features})
        for name in feature_names:
            table[name] = [r.features.get(name) for r in self.rows]
        return table


def _mean_or_none(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return float(np.mean(present))


def build_monthly_panel(rows: Iterable[EnrichedReview], asin: str,
                        purchase_proxy: str,
                        include_features: bool = False) -> MonthlyPanel:
    """Aggregate one product's scored reviews by (year, month).

    purchase_proxy picks the purchase-count definition: 'verified_sum'
    sums the verified-purchase flags, 'review_count' counts rows. With
    include_features the per-month means of the review-level features and
    the squared mean sentiment are attached. All rows must be scored.
    """
    if purchase_proxy not in PURCHASE_PROXIES:
        raise AnalyticsError(f"unknown purchase proxy {purchase_proxy!r}")
    selected = [r for r in rows if r.parent_asin == asin]
    if not selected:
        raise AnalyticsError(f"no rows for parent_asin {asin!r}")
    unscored = sum(1 for r in selected if r.sentiment_score is None)
    if unscored:
        raise AnalyticsError(f"{unscored} rows for {asin!r} lack sentiment scores")

    groups: dict[tuple[int, int], list[EnrichedReview]] = {}
    for r in selected:
        groups.setdefault((r.year, r.month), []).append(r)

    panel_rows = []
    for (year, month) in sorted(groups):
        grp = groups[(year, month)]
        scores = [r.sentiment_score for r in grp]
        avg = float(np.mean(scores))
        if purchase_proxy == "verified_sum":
            count = float(sum(r.verified_purchase_flag for r in grp))
        else:
            count = float(len(grp))
        features: dict = {}
        if include_features:
            features = {
                "review_length": float(np.mean([r.review_length for r in grp])),
                "helpful_vote": float(np.mean([r.helpful_vote for r in grp])),
                "rating": float(np.mean([r.rating for r in grp])),
                "has_images": float(np.mean([r.has_images for r in grp])),
                "weekday": float(np.mean([r.weekday for r in grp])),
                "average_rating": _mean_or_none([r.average_rating for r in grp]),
                "rating_number": _mean_or_none(
                    [None if r.rating_number is None else float(r.rating_number) for r in grp]),
                "sentiment_score_squared": avg * avg,
            }
        panel_rows.append(MonthlyPanelRow(
            year=year, month=month, year_month=f"{year}-{month:02d}",
            sentiment_score_avg=avg, purchase_count=count, features=features,
        ))
    return MonthlyPanel(asin=asin, purchase_proxy=purchase_proxy, rows=tuple(panel_rows))


def pearson(x, y) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise AnalyticsError("inputs must be 1-D and the same length")
    if a.size < 2:
        raise AnalyticsError("correlation needs at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0:
        raise AnalyticsError("correlation undefined for constant input")
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    f_statistic: float
    f_pvalue: float
    residuals: np.ndarray
    mse: float
    n: int
    k: int
    df_resid: int
    names: tuple[str, ...]
    has_intercept: bool

    def predict(self, x_new) -> np.ndarray:
        x = np.asarray(x_new, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if self.has_intercept:
            x = np.column_stack([np.ones(len(x)), x])
        if x.shape[1] != self.k:
            raise AnalyticsError(f"expected {self.k} design columns, got {x.shape[1]}")
        return x @ self.coefficients


def _dependent_columns(design: np.ndarray, names: Sequence[str]) -> list[str]:
    culprits = []
    prev_rank = 0
    for j in range(design.shape[1]):
        rank = np.linalg.matrix_rank(design[:, :j + 1])
        if rank == prev_rank:
            culprits.append(names[j])
        prev_rank = rank
    return culprits


def ols_fit(x, y, add_intercept: bool = True,
            names: Sequence[str] | None = None) -> OlsFit:
    """Least-squares fit with the standard inference block.

    x is the design matrix without a constant column; with add_intercept a
    leading 1s column is prepended. Standard errors come from
    sigma^2 (X'X)^-1 with sigma^2 = RSS/(n-k); p-values are two-sided
    Student-t with n-k degrees of freedom.
    """
    xm = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float).ravel()
    if xm.ndim == 1:
        xm = xm.reshape(-1, 1)
    if xm.shape[0] != yv.shape[0]:
        raise AnalyticsError("X and y row counts differ")
    if not (np.all(np.isfinite(xm)) and np.all(np.isfinite(yv))):
        raise AnalyticsError("design matrix and target must be finite")

    if names is None:
        names = [f"x{j + 1}" for j in range(xm.shape[1])]
    names = list(names)
    if add_intercept:
        design = np.column_stack([np.ones(len(yv)), xm])
        names = ["const"] + names
    else:
        design = xm
    n, k = design.shape
    if n <= k:
        raise AnalyticsError(f"need more observations ({n}) than parameters ({k})")
    if np.linalg.matrix_rank(design) < k:
        raise SingularDesignError(_dependent_columns(design, names))

    beta, _, _, _ = np.linalg.lstsq(design, yv, rcond=None)
    resid = yv - design @ beta
    rss = float(resid @ resid)
    df_resid = n - k
    sigma2 = rss / df_resid
    cov = sigma2 * np.linalg.inv(design.T @ design)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, beta / se, np.inf * np.sign(beta))

    def _pvalue(t: float) -> float:
        if np.isnan(t):
            return float("nan")
        if np.isinf(t):
            return 0.0
        return t_sf_two_sided(float(t), df_resid)

    p_values = np.array([_pvalue(t) for t in t_stats])

    if add_intercept:
        tss = float(np.sum((yv - yv.mean()) ** 2))
        df_model = k - 1
    else:
        tss = float(np.sum(yv ** 2))
        df_model = k
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = float("nan")
    if np.isfinite(r2) and df_model > 0:
        if r2 < 1.0:
            f_stat = (r2 / df_model) / ((1.0 - r2) / df_resid)
            f_p = f_sf(f_stat, df_model, df_resid)
        else:
            f_stat = float("inf")
            f_p = 0.0
    else:
        f_stat = float("nan")
        f_p = float("nan")
    if np.isfinite(r2):
        adj = 1.0 - (1.0 - r2) * ((n - 1) if add_intercept else n) / (n - k)
    else:
        adj = float("nan")

    return OlsFit(
        coefficients=beta,
        standard_errors=se,
        t_stats=t_stats,
        p_values=p_values,
        r_squared=r2,
        adj_r_squared=adj,
        f_statistic=f_stat,
        f_pvalue=f_p,
        residuals=resid,
        mse=rss / n,
        n=n,
        k=k,
        df_resid=df_resid,
        names=tuple(names),
        has_intercept=add_intercept,
    )


def format_ols_summary(fit: OlsFit, title: str = "OLS Regression Results") -> str:
    """Aligned text block: header stats then the coefficient table."""
    lines = [title, "=" * 70]
    lines.append(f"n observations: {fit.n:>6d}    df residual: {fit.df_resid:>6d}")
    lines.append(f"R-squared:      {fit.r_squared:>10.4f}    Adj. R-squared: {fit.adj_r_squared:>10.4f}")
    lines.append(f"F-statistic:    {fit.f_statistic:>10.4f}    Prob (F):       {fit.f_pvalue:>10.4f}")
    lines.append(f"MSE (RSS/n):    {fit.mse:>10.6g}")
    lines.append("-" * 70)
    lines.append(f"{'':>16}{'coef':>12}{'std err':>12}{'t':>10}{'P>|t|':>10}")
    for name, b, s, t, p in zip(fit.names, fit.coefficients, fit.standard_errors,
                                fit.t_stats, fit.p_values):
        lines.append(f"{name:>16}{b:>12.6f}{s:>12.6f}{t:>10.3f}{p:>10.4f}")
    lines.append("=" * 70)
    return "\n".join(lines)


@dataclass(frozen=True)
class StandardizeResult:
    z: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    constant_columns: tuple[int, ...]


def standardize(x) -> StandardizeResult:
    """Column-wise (x - mean) / std with population (divide-by-n) std.

    Constant columns cannot be scaled; they map to all-zero and are
    flagged by index.
    """
    xm = np.asarray(x, dtype=float)
    if xm.ndim != 2:
        raise AnalyticsError("standardize expects a 2-D matrix")
    if xm.shape[0] < 2:
        raise AnalyticsError("standardize needs at least 2 rows")
    means = xm.mean(axis=0)
    stds = xm.std(axis=0)
    constant = tuple(int(j) for j in np.nonzero(stds == 0)[0])
    safe = np.where(stds == 0, 1.0, stds)
    z = (xm - means) / safe
    return StandardizeResult(z=z, means=means, stds=stds, constant_columns=constant)


@dataclass(frozen=True)
class PcaModel:
    feature_means: np.ndarray
    feature_stds: np.ndarray
    components: np.ndarray          # rows are principal directions
    explained_variance_ratio: np.ndarray
    k_retained: int

    def project(self, z, k: int | None = None) -> np.ndarray:
        """Scores of standardized rows on the first k directions (default: retained)."""
        if k is None:
            k = self.k_retained
        return np.asarray(z, dtype=float) @ self.components[:k].T

    def reconstruct(self, scores) -> np.ndarray:
        """Map scores back to the standardized space (uses as many directions as columns given)."""
        s = np.asarray(scores, dtype=float)
        return s @ self.components[: s.shape[1]]


def pca_fit(z, variance_target: float, feature_means=None, feature_stds=None) -> PcaModel:
    """Principal directions of a standardized matrix via SVD.

    Ratios are the singular values squared over their total, sorted
    descending; k_retained is the smallest k whose cumulative ratio meets
    the target. Each component's largest-magnitude entry is made positive
    so outputs are sign-deterministic.
    """
    zm = np.asarray(z, dtype=float)
    if zm.ndim != 2:
        raise AnalyticsError("pca_fit expects a 2-D matrix")
    n, d = zm.shape
    if n < 2:
        raise AnalyticsError("pca_fit needs at least 2 rows")
    if not 0.0 < variance_target <= 1.0:
        raise AnalyticsError("variance_target must lie in (0, 1]")

    _, s, vt = np.linalg.svd(zm, full_matrices=False)
    total = float(np.sum(s ** 2))
    if total == 0:
        raise AnalyticsError("input has zero variance; nothing to decompose")
    ratios = s ** 2 / total
    cumulative = np.cumsum(ratios)
    k_retained = int(np.argmax(cumulative >= variance_target - 1e-12)) + 1

    components = vt.copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0

    if feature_means is None:
        feature_means = zm.mean(axis=0)
    if feature_stds is None:
        feature_stds = zm.std(axis=0)
    return PcaModel(
        feature_means=np.asarray(feature_means, dtype=float),
        feature_stds=np.asarray(feature_stds, dtype=float),
        components=components,
        explained_variance_ratio=ratios,
        k_retained=k_retained,
    )


def train_test_split(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, test) index arrays from a seeded shuffle of 0..n-1."""
    if not 0.0 <= test_fraction < 1.0:
        raise AnalyticsError("test_fraction must lie in [0, 1)")
    if n < 0:
        raise AnalyticsError("n must be non-negative")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = round(n * test_fraction)
    return perm[n_test:], perm[:n_test]


@dataclass(frozen=True)
class PcRegressionResult:
    pca: PcaModel
    fit: OlsFit
    test_mse: float
    feature_names: tuple[str, ...]
    train_indices: np.ndarray
    test_indices: np.ndarray


def pc_regression(panel: MonthlyPanel, variance_target: float,
                  test_fraction: float, seed: int) -> PcRegressionResult:
    """Standardize -> PCA -> split -> OLS on retained components -> test MSE.

    The design uses the full panel feature block (mean sentiment, its
    square, feature means, year, month) against purchase_count. Missing
    feature values are filled with 0 before standardization.
    """
    if len(panel) < 3:
        raise AnalyticsError("principal-component regression needs at least 3 panel rows")
    if any(not r.features for r in panel.rows):
        raise AnalyticsError("panel was built without features; rebuild with include_features")

    x = panel.feature_matrix(PANEL_FEATURES)
    y = panel.column("purchase_count")
    x = np.nan_to_num(x, nan=0.0)
    y = np.nan_to_num(y, nan=0.0)

    std = standardize(x)
    pca = pca_fit(std.z, variance_target, feature_means=std.means, feature_stds=std.stds)
    scores = pca.project(std.z)

    train_idx, test_idx = train_test_split(len(y), test_fraction, seed)
    comp_names = [f"pc{j + 1}" for j in range(pca.k_retained)]
    fit = ols_fit(scores[train_idx], y[train_idx], add_intercept=True, names=comp_names)
    if len(test_idx) > 0:
        pred = fit.predict(scores[test_idx])
        test_mse = float(np.mean((y[test_idx] - pred) ** 2))
    else:
        test_mse = float("nan")
    return PcRegressionResult(
        pca=pca, fit=fit, test_mse=test_mse,
        feature_names=tuple(PANEL_FEATURES),
        train_indices=train_idx, test_indices=test_idx,
    )
