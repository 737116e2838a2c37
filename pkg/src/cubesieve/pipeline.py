"""Orchestration of the elimination run over (case, p, r) work items.

Work items flow through the stages in a fixed order: the exponent sieve
selects the surviving (p, r) pairs for the transformable cases, exponents
5 and 7 are settled by the rational-point and finite-enumeration results,
and everything else passes through the residue-set criterion, local
solubility and the quadratic-field descent.  Reports are deterministic
functions of the job, independent of the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Iterable, Optional

import numpy as np

from .arith import primes_up_to
from .descent import (
    EXPONENT_BOUNDS,
    HIGH_CASES,
    SIEVE_CASES,
    admissible_r,
    get_case,
    instantiate_ternary,
    mignotte_bound,
)
from .quadfield import nfdescent_eliminates
from .sieves import (
    PrimitiveDivisorSieve,
    coprimify,
    germain_eliminate_batch,
    germain_sets,
    germain_verify_witness,
    local_eliminates,
    pd_allowed_primes,
)
from .smallexp import p7_eliminate, thue_bruteforce

STAGE_ORDER = ("patel", "chabauty", "p7", "thue", "germain", "local",
               "nfdescent", "survivor")
CHAIN_STAGES = ("germain", "local", "nfdescent")


class SoundnessError(Exception):
    """An internal re-verification failed; the run must not be trusted."""


@dataclass(frozen=True)
class JobSpec:
    cases: tuple[int, ...]
    r_min: int = 1
    r_max: int = 10**6
    r_values: Optional[tuple[int, ...]] = None
    p_policy: "str | tuple[int, ...]" = "auto"
    kmax: int = 1000
    kmax_aux: int = 200
    stages: tuple[str, ...] = ("patel", "germain", "local", "nfdescent",
                               "thue")
    workers: int = 1
    detail: str = "full"  # or "survivors"
    include_timing: bool = False
    spotcheck_rate: float = 0.01
    spotcheck_exhaustive_q: int = 1000
    thue_bound: int = 10**4

    def __post_init__(self) -> None:
        if self.r_min > self.r_max and self.r_values is None:
            raise ValueError("empty r range")
        if self.detail not in ("full", "survivors"):
            raise ValueError("detail must be 'full' or 'survivors'")
        order = [s for s in ("patel", "germain", "local", "nfdescent",
                             "thue") if s in self.stages]
        if list(self.stages) != order:
            raise ValueError("stages must respect the canonical order")


@dataclass(frozen=True)
class EliminationRecord:
    case_id: int
    p: int
    r: int
    stage: str
    witness: dict
    us: int = 0


@dataclass
class Report:
    job: JobSpec
    aggregates: dict  # (case, p, stage) -> count
    records: list  # EliminationRecord, present per job.detail
    survivors: list  # always materialized
    totals: dict
    soundness: dict
    elapsed_us: int = 0


def _count_admissible(case_id: int, lo: int, hi: int) -> int:
    """#{lo <= r <= hi admissible}, by inclusion-exclusion."""
    if hi < lo:
        return 0
    forb = sorted(get_case(case_id).r_forbidden)
    total = 0
    for k in range(len(forb) + 1):
        for combo in combinations(forb, k):
            d = math.prod(combo)
            total += (-1) ** k * (hi // d - (lo - 1) // d)
    return total


def _admissible_in(case_id: int, job: JobSpec) -> list[int]:
    if job.r_values is not None:
        return [r for r in sorted(set(job.r_values))
                if admissible_r(case_id, r)]
    return [r for r in range(job.r_min, job.r_max + 1)
            if admissible_r(case_id, r)]


def _spotcheck_selected(case_id: int, p: int, r: int, rate: float) -> bool:
    digest = hashlib.md5(f"{case_id},{p},{r}".encode()).digest()
    return int.from_bytes(digest[:4], "big") < rate * 2**32


def _recheck_germain(case_id: int, p: int, r: int, q: int,
                     exhaustive_q: int) -> bool:
    """Re-derive the empty residue set through the scalar path and, for
    small q, by exhausting both value sets over F_q."""
    form = coprimify(instantiate_ternary(case_id, p, r))
    a, b, c = form.d_int() % q, form.e_int() % q, form.f_nu % q
    k = (q - 1) // (2 * p)
    _, s_set = germain_sets(a, b, c, p, q, k)
    if s_set:
        return False
    if q <= exhaustive_q:
        return germain_verify_witness(a, b, c, p, q)
    return True


def _run_chain_task(args: tuple) -> tuple:
    """Worker entry: one (case, p) batch through the chain stages."""
    case_id, p, rs, job = args
    case = get_case(case_id)
    rs_arr = np.asarray(rs, dtype=np.int64)
    n = len(rs_arr)
    stages = job.stages
    results: list[tuple[int, str, dict]] = []
    spot_pass = spot_fail = 0
    alive_idx = np.arange(n)
    if "germain" in stages and n:
        wq, wk = germain_eliminate_batch(case.w2_coeff, case.w1_coeff,
                                         case.rhs_coeff, rs_arr, p,
                                         kmax=job.kmax)
        for i in np.nonzero(wq > 0)[0]:
            r, q = int(rs_arr[i]), int(wq[i])
            results.append((r, "germain", {"q": q, "k": int(wk[i])}))
            if _spotcheck_selected(case_id, p, r, job.spotcheck_rate):
                if _recheck_germain(case_id, p, r, q,
                                    job.spotcheck_exhaustive_q):
                    spot_pass += 1
                else:
                    spot_fail += 1
        alive_idx = np.nonzero(wq == 0)[0]
    for i in alive_idx:
        r = int(rs_arr[i])
        form = coprimify(instantiate_ternary(case_id, p, r))
        if "local" in stages:
            loc = local_eliminates(form)
            if loc is not None:
                results.append((r, "local",
                                {"test": loc.test, "q": loc.q}))
                continue
        if "nfdescent" in stages:
            nf = nfdescent_eliminates(form, kmax_aux=job.kmax_aux)
            if nf.eliminated:
                results.append((r, "nfdescent",
                                {"reason": nf.reason, **nf.witness}))
                continue
        witness: dict = {"stages_passed": [s for s in stages
                                           if s in CHAIN_STAGES]}
        if "thue" in stages and p <= 13:
            sols = thue_bruteforce(
                case.w2_coeff.value(p), case.w1_coeff.value(p),
                case.rhs_coeff, p, bound=job.thue_bound, r_max=r,
                r_values=[r], require_square_tau=True)
            witness["thue_bound"] = job.thue_bound
            witness["thue_solutions"] = sols
            witness["thue_nontrivial"] = [s for s in sols if s[0] * s[1]]
        results.append((r, "survivor", witness))
    return case_id, p, results, spot_pass, spot_fail


def _plan(job: JobSpec) -> tuple[list, dict, dict]:
    """(chain tasks, closed-form aggregates, shared witnesses)."""
    tasks = []
    aggregates: dict[tuple[int, int, str], int] = {}
    shared: dict[tuple[int, int, str], dict] = {}
    sieve: Optional[PrimitiveDivisorSieve] = None
    need_sieve = (job.r_values is None and job.p_policy == "auto"
                  and any(c in SIEVE_CASES for c in job.cases))
    if need_sieve:
        sieve = _sieve_for(job.r_max)
    for case_id in sorted(job.cases):
        bound = EXPONENT_BOUNDS[case_id]
        if bound < 5:
            continue
        if job.p_policy == "auto":
            if case_id in SIEVE_CASES:
                p_list = [5, 7]
            else:
                p_list = [p for p in primes_up_to(bound) if p >= 5]
        else:
            p_list = sorted(job.p_policy)
        adm: Optional[list[int]] = None
        for p in p_list:
            route = _route(case_id, p)
            if route == "chain" and case_id in SIEVE_CASES:
                continue  # handled from the sieve index below
            if adm is None:
                adm = _admissible_in(case_id, job)
            if not adm:
                continue
            if route == "chain":
                tasks.append((case_id, p, adm, job))
            else:
                aggregates[(case_id, p, route)] = len(adm)
                shared[(case_id, p, route)] = _cited_witness(case_id, p,
                                                             route, job)
        if case_id in SIEVE_CASES:
            if job.p_policy == "auto" and sieve is not None:
                items = sieve.work_items(case_id)
                n_adm = _count_admissible(case_id, job.r_min, job.r_max)
                for p in primes_up_to(bound):
                    if p < 11:
                        continue
                    rs = [r for r in items.get(p, ()) if r >= job.r_min]
                    if rs:
                        tasks.append((case_id, p, rs, job))
                    patel_killed = n_adm - len(rs)
                    if patel_killed:
                        aggregates[(case_id, p, "patel")] = patel_killed
            elif job.p_policy != "auto":
                if adm is None:
                    adm = _admissible_in(case_id, job)
                for p in sorted(job.p_policy):
                    if _route(case_id, p) != "chain":
                        continue
                    if "patel" not in job.stages:
                        tasks.append((case_id, p, adm, job))
                        continue
                    allowed, killed = [], 0
                    for r in adm:
                        if p in pd_allowed_primes(case_id, r, max(p, 11)):
                            allowed.append(r)
                        else:
                            killed += 1
                    if allowed:
                        tasks.append((case_id, p, allowed, job))
                    if killed:
                        aggregates[(case_id, p, "patel")] = killed
    tasks.sort(key=lambda t: (t[0], t[1]))
    return tasks, aggregates, shared


_sieve_cache: dict[int, PrimitiveDivisorSieve] = {}


def _sieve_for(rmax: int) -> PrimitiveDivisorSieve:
    if rmax not in _sieve_cache:
        _sieve_cache[rmax] = PrimitiveDivisorSieve(rmax)
    return _sieve_cache[rmax]


def _route(case_id: int, p: int) -> str:
    if p == 5:
        return "thue" if case_id == 3 else "chabauty"
    if p == 7 and case_id in SIEVE_CASES:
        return "p7"
    return "chain"


def _cited_witness(case_id: int, p: int, route: str, job: JobSpec) -> dict:
    if route == "chabauty":
        from .smallexp import chabauty_table

        row = next(r for r in chabauty_table() if r.case_id == case_id)
        return {"model": [row.model_a, row.model_b],
                "rational_points": [list(pt) for pt in row.points],
                "resolution": "curve rational points imply x*y = 0"}
    if route == "thue":
        case = get_case(case_id)
        sols = thue_bruteforce(
            case.w2_coeff.value(5), case.w1_coeff.value(5), case.rhs_coeff,
            5, bound=job.thue_bound, r_max=job.r_max, r_min=1,
            r_filter=lambda r: admissible_r(case_id, r),
            require_square_tau=True)
        return {"bound": job.thue_bound,
                "solutions": [list(s) for s in sols],
                "resolution": "bounded search; all solutions have w1 = 0"}
    if route == "p7":
        eliminated, witnesses = p7_eliminate(case_id)
        if not eliminated:
            raise SoundnessError(f"p=7 elimination failed for case {case_id}")
        return {"w2_values": [3, 5, 9],
                "enumerations": {w.w2: len(w.solutions) for w in witnesses},
                "resolution": "every solution violates gcd(x, r) = 1"}
    raise AssertionError(route)


def run(job: JobSpec) -> Report:
    """Execute the elimination pipeline and assemble the report."""
    t0 = time.monotonic()
    tasks, aggregates, shared = _plan(job)
    records: list[EliminationRecord] = []
    survivors: list[EliminationRecord] = []
    spot_pass = spot_fail = 0
    if job.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=job.workers) as pool:
            outcomes = list(pool.map(_run_chain_task, tasks,
                                     chunksize=max(1, len(tasks) // (8 * job.workers))))
    else:
        outcomes = [_run_chain_task(t) for t in tasks]
    for case_id, p, results, sp, sf in outcomes:
        spot_pass += sp
        spot_fail += sf
        for r, stage, witness in results:
            key = (case_id, p, stage)
            aggregates[key] = aggregates.get(key, 0) + 1
            rec = EliminationRecord(case_id, p, r, stage, witness)
            if stage == "survivor":
                survivors.append(rec)
            if job.detail == "full":
                records.append(rec)
    if job.detail == "full":
        adm_cache: dict[int, list[int]] = {}
        for (case_id, p, stage), witness in sorted(shared.items()):
            if case_id not in adm_cache:
                adm_cache[case_id] = _admissible_in(case_id, job)
            for r in adm_cache[case_id]:
                records.append(EliminationRecord(case_id, p, r, stage,
                                                 witness))
    if spot_fail:
        raise SoundnessError(f"{spot_fail} germain spot-checks failed")
    records.sort(key=lambda rec: (rec.case_id, rec.p, rec.r))
    survivors.sort(key=lambda rec: (rec.case_id, rec.p, rec.r))
    totals = _totals(aggregates)
    _check_conservation(job, aggregates)
    report = Report(
        job=job,
        aggregates=aggregates,
        records=records,
        survivors=survivors,
        totals=totals,
        soundness={"germain_spotchecks": spot_pass + spot_fail,
                   "failures": spot_fail},
    )
    if job.include_timing:
        report.elapsed_us = int((time.monotonic() - t0) * 1e6)
    return report


def _totals(aggregates: dict) -> dict:
    by_stage: dict[str, int] = {}
    for (_, _, stage), n in aggregates.items():
        by_stage[stage] = by_stage.get(stage, 0) + n
    return {
        "items": sum(by_stage.values()),
        "by_stage": {s: by_stage[s] for s in STAGE_ORDER if s in by_stage},
        "survivors": by_stage.get("survivor", 0),
    }


def _check_conservation(job: JobSpec, aggregates: dict) -> None:
    """Every admissible (case, p, r) item lands in exactly one stage."""
    per_cp: dict[tuple[int, int], int] = {}
    for (case_id, p, _), n in aggregates.items():
        per_cp[(case_id, p)] = per_cp.get((case_id, p), 0) + n
    for (case_id, p), n in per_cp.items():
        expected = (_count_admissible(case_id, job.r_min, job.r_max)
                    if job.r_values is None
                    else len(_admissible_in(case_id, job)))
        if n != expected:
            raise SoundnessError(
                f"conservation failed for case {case_id}, p={p}: "
                f"{n} != {expected}")


def table2_counts(rmax: int = 10**6) -> dict[int, dict[str, int]]:
    """Work-item counts for the sieve cases at the given range, under both
    the published-table convention and the sound pipeline convention,
    with the post-bound approximate count as informational output."""
    sieve = _sieve_for(rmax)
    out = {}
    for case_id in SIEVE_CASES:
        bound = EXPONENT_BOUNDS[case_id]
        n_primes = len([p for p in primes_up_to(bound) if p >= 5])
        out[case_id] = {
            "published_convention": sieve.published_count(case_id),
            "pipeline_items": sieve.count(case_id),
            "admissible_r": sieve.admissible_counts[case_id],
            "approx_after_bound": sieve.admissible_counts[case_id] * n_primes,
        }
    return out


def _record_dict(rec: EliminationRecord) -> dict:
    return {"case": rec.case_id, "p": rec.p, "r": rec.r,
            "stage": rec.stage, "witness": rec.witness, "us": rec.us}


def report_dict(report: Report) -> dict:
    job = asdict(report.job)
    job["r_values"] = list(job["r_values"]) if job["r_values"] else None
    aggregates = [
        {"case": c, "p": p, "stage": s, "count": n}
        for (c, p, s), n in sorted(report.aggregates.items())
    ]
    out = {
        "job": job,
        "aggregates": aggregates,
        "totals": report.totals,
        "survivors": [_record_dict(r) for r in report.survivors],
        "soundness": report.soundness,
    }
    if report.job.detail == "full":
        out["records"] = [_record_dict(r) for r in report.records]
    if report.job.include_timing:
        out["elapsed_us"] = report.elapsed_us
    return out


def emit(report: Report, fmt: str = "json") -> str:
    """Serialize a report; byte-identical across worker counts."""
    if fmt == "json":
        return json.dumps(report_dict(report), sort_keys=True,
                          separators=(",", ":")) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["case", "p", "r", "stage", "witness", "us"])
        rows = (report.records if report.job.detail == "full"
                else report.survivors)
        for rec in rows:
            writer.writerow([rec.case_id, rec.p, rec.r, rec.stage,
                             json.dumps(rec.witness, sort_keys=True), rec.us])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def write_report(report: Report, path: str, fmt: str = "json") -> None:
    with open(path, "w") as fh:
        fh.write(emit(report, fmt))
