"""Session fixtures: both case studies built once and shared by every test.

The heavy objects (transfer matrix, SRB estimate, resolvent, optimal field)
take a few seconds each at n=32, so they are constructed a single time per
session.  Tests must treat them as read-only.
"""
from __future__ import annotations

import dataclasses
import time

import pytest

from anosovresp.maps import TorusMapSpec, builtin_map
from anosovresp.response import ObjectiveSpec, OptimalField, optimal_field
from anosovresp.spectral import SpectralConfig
from anosovresp.transfer import (
    ResolventSolver,
    SRBEstimate,
    TransferMatrix,
    build_resolvent,
    build_transfer_matrix,
    leading_eigenpair,
)
from anosovresp.validate import ResponseProbe, finite_difference_response

STOCK_DELTAS = (1e-3, 2e-3, 4e-3)
HALVED_DELTAS = (5e-4, 1e-3, 2e-3)

ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion():
    """Recorder for acceptance tests: one pass/fail line per criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_REPORT.append(line)
        assert ok, line

    return record


@dataclasses.dataclass
class Study:
    """One case study: map, observable, and every pipeline product."""

    config: SpectralConfig
    m: TorusMapSpec
    objective: ObjectiveSpec
    tm: TransferMatrix
    estimate: SRBEstimate
    solver: ResolventSolver
    field: OptimalField


def build_study(m: TorusMapSpec, objective: ObjectiveSpec, config: SpectralConfig) -> Study:
    tm = build_transfer_matrix(m, config)
    estimate = leading_eigenpair(tm)
    solver = build_resolvent(tm)
    field = optimal_field(objective, tm, solver, estimate, m)
    return Study(
        config=config,
        m=m,
        objective=objective,
        tm=tm,
        estimate=estimate,
        solver=solver,
        field=field,
    )


def nonlinear_objective() -> ObjectiveSpec:
    return ObjectiveSpec(
        kind="gaussian_pair",
        p1=(0.1796, 0.4023),
        p2=(0.7877, 0.5852),
        sigma=0.1,
    )


@pytest.fixture(scope="session")
def cat_study() -> Study:
    return build_study(
        builtin_map("cat"),
        ObjectiveSpec(kind="cosine_sum"),
        SpectralConfig(n=32, N=128, gamma=0.02),
    )


@pytest.fixture(scope="session")
def nl_study() -> Study:
    return build_study(
        builtin_map("nonlinear_cat"),
        nonlinear_objective(),
        SpectralConfig(n=32, N=128, gamma=0.02),
    )


@pytest.fixture(scope="session")
def cat8() -> Study:
    """Small cat-map study for structural tests that do not need n=32."""
    return build_study(
        builtin_map("cat"),
        ObjectiveSpec(kind="cosine_sum"),
        SpectralConfig(n=8, N=32, gamma=0.02),
    )


PROBE_SECONDS: dict[str, float] = {}


def probe(study: Study, deltas, label: str | None = None) -> ResponseProbe:
    started = time.perf_counter()
    result = finite_difference_response(
        study.m, study.field, study.objective, deltas, study.config
    )
    if label is not None:
        PROBE_SECONDS[label] = time.perf_counter() - started
    return result


@pytest.fixture(scope="session")
def cat_probe(cat_study: Study) -> ResponseProbe:
    return probe(cat_study, STOCK_DELTAS, label="cat")


@pytest.fixture(scope="session")
def nl_probe(nl_study: Study) -> ResponseProbe:
    return probe(nl_study, STOCK_DELTAS, label="nonlinear_cat")
