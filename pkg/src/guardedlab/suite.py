"""The acceptance battery, one function per criterion, shared by the CLI and the tests."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

from . import clocks, frames, order, theories, trees, wtypes
from .report import Result, RunReport

MAX_POSET = 5


def _instances(max_size: int = MAX_POSET):
    for n in range(max_size + 1):
        for p in order.all_posets(n):
            for w in order.compatible_wf_relations(p):
                yield w


def loeb_soundness(max_size: int = MAX_POSET) -> Result:
    count = 0
    for w in _instances(max_size):
        count += 1
        chk = frames.check_loeb(frames.downset_frame(w))
        if not chk.ok:
            return Result("01_loeb_soundness", False, {"poset": w, "open": chk.witness})
    return Result("01_loeb_soundness", True, detail=f"{count} (poset, relation) instances")


def loeb_necessity() -> Result:
    bf = frames.loop_frame()
    chk = frames.check_loeb(bf)
    ok = not chk.ok and chk.witness == bf.frame.bottom
    return Result("02_loeb_necessity", ok, chk.witness, f"loop frame counterexample {chk.witness!r}")


def fixpoints(count: int = 25, stages: int = 8, seed: int = 0) -> Result:
    for i in range(count):
        a = trees.random_staged_set(f"{seed}:{i}", max_size=6)
        f = trees.random_step(a, f"{seed}:{i}", check_upto=stages)
        g = trees.gfix(f)
        bad = trees.fixpoint_failure(f, g, stages)
        if bad is not None or not trees.check_fix_unique(f, stages):
            return Result("03_fixpoints", False, {"map": i, "stage": bad})
    return Result("03_fixpoints", True, detail=f"{count} step maps, stages 0..{stages}")


def stream_programs(max_take: int = 8) -> Result:
    nat = clocks.builtin_costream("naturals", 10)
    if clocks.co_take(0, nat) != []:
        return Result("04_stream_programs", False, "take 0 is not empty")
    for n in range(max_take + 1):
        got = clocks.co_take(n, nat)
        if got != [i % 10 for i in range(n)]:
            return Result("04_stream_programs", False, {"n": n, "got": got})
    for name in ("naturals", "zeros", "alternating"):
        s = clocks.builtin_costream(name, 10)
        t = clocks.co_tail(s)
        for m in range(max_take):
            if clocks.co_head(s) != s.at(m)[0] or t.at(m) != s.at(m + 1)[1:]:
                return Result("04_stream_programs", False, {"program": name, "stage": m})
        for n in range(max_take):
            if clocks.co_take(n + 1, s) != [clocks.co_head(s)] + clocks.co_take(n, t):
                return Result("04_stream_programs", False, {"program": name, "take": n + 1})
    return Result("04_stream_programs", True, detail=f"take 0..{max_take} and head/tail/take equations")


def force_iso(count: int = 12, stages: int = 8, seed: int = 0) -> Result:
    for i in range(count):
        x, ctx = clocks.random_multipresheaf(f"{seed}:{i}")
        bad = clocks.check_force_iso(x, "k", ctx, stages)
        if bad:
            return Result("05_force_iso", False, {"presheaf": x.name, "context": str(ctx), "failure": bad[0]})
    stream = clocks.stream_in("k", (0, 1))
    bad = clocks.check_force_iso(stream, "k", clocks.ClockContext(), stages)
    if bad:
        return Result("05_force_iso", False, {"presheaf": stream.name, "failure": bad[0]})
    return Result("05_force_iso", True, detail=f"{count} random presheaves plus binary streams, stages 0..{stages}")


def clock_irrelevance(stages: int = 8, seed: int = 0) -> Result:
    cases = [
        (clocks.Constant((0, 1, 2)), clocks.ClockContext()),
        (clocks.Constant(("*",)), clocks.ClockContext()),
        (clocks.stream_in("j", (0, 1)), clocks.ClockContext.of(j=2)),
        (clocks.Pullback(trees.random_staged_set(f"{seed}:irr", 4), "j"), clocks.ClockContext.of(j=3)),
        (clocks.Product(clocks.Constant((0, 1)), clocks.stream_in("j", (0,))), clocks.ClockContext.of(j=1)),
    ]
    for x, ctx in cases:
        if not clocks.check_clock_irrelevance(x, "k", ctx, stages):
            return Result("06_clock_irrelevance", False, {"presheaf": x.name, "context": str(ctx)})
    if not clocks.check_forall_later_constant((0, 1, 2), "k", stages):
        return Result("06_clock_irrelevance", False, "forall k. later_k A differs from A")
    return Result("06_clock_irrelevance", True, detail=f"{len(cases)} presheaves constant in k, stages 0..{stages}")


def classifying(max_size: int = MAX_POSET) -> Result:
    counts = {"posets": 0, "chains": 0, "meet-semilattices": 0}
    for n in range(max_size + 1):
        for p in order.all_posets(n):
            counts["posets"] += 1
            models = set(theories.enumerate_models(theories.filt_theory(p)))
            if models != set(theories.filters_oracle(p)):
                return Result("07_classifying", False, {"poset": p, "presentation": "filters"})
            if all(p.le(u, v) or p.le(v, u) for u in p.elements for v in p.elements):
                counts["chains"] += 1
                if set(theories.enumerate_models(theories.chain_simplify(p))) != models:
                    return Result("07_classifying", False, {"poset": p, "presentation": "chain"})
            try:
                cart = theories.cartesian_simplify(p)
            except ValueError:
                continue
            counts["meet-semilattices"] += 1
            if set(theories.enumerate_models(cart)) != models:
                return Result("07_classifying", False, {"poset": p, "presentation": "cartesian"})
    return Result("07_classifying", True, detail=", ".join(f"{v} {k}" for k, v in counts.items()))


def bag_counts(max_size: int = 4, max_index: int = 3) -> Result:
    checked = 0
    for n in range(max_size + 1):
        for p in order.all_posets(n):
            filt = theories.filt_theory(p)
            n_filters = len(theories.filters_oracle(p))
            for m in range(max_index + 1):
                raw_expected = sum(n_filters**k for k in range(m + 1))
                bag = theories.enumerate_bag_models(theories.bag_theory(filt), m)
                ibag = theories.enumerate_bag_models(theories.ibag_theory(filt), m)
                iso = len(theories.bag_models_up_to_iso(bag))
                if (len(bag), iso) != theories.bag_count(n_filters, m) or len(bag) != raw_expected:
                    return Result("08_bag_counts", False, {"poset": p, "max_index": m, "raw": len(bag)})
                if len(bag) - len(ibag) != 1 or any(not mdl.index for mdl in ibag):
                    return Result("08_bag_counts", False, {"poset": p, "max_index": m, "inhabited": len(ibag)})
                checked += 1
    return Result("08_bag_counts", True, detail=f"{checked} (poset, index bound) pairs")


def clock_category(max_clocks: int = 3, max_depth: int = 4, seed: int = 0) -> Result:
    k_cat = clocks.KCategory(max_clocks, max_depth)
    laws = clocks.check_category_laws(k_cat, sample=3000, seed=seed)
    if laws:
        return Result("09_clock_category", False, {"category laws": laws[0]})
    iso = clocks.check_fp_op_iso(max_clocks, max_depth, seed=seed)
    clk = clocks.check_fp_op_iso(max_clocks, max_depth, nonempty=True, seed=seed)
    if not iso.ok or not clk.ok:
        return Result("09_clock_category", False, {"K": iso.hom_mismatches[:1], "CLK": clk.hom_mismatches[:1]})
    sd = clocks.check_semidirect(max_clocks, max_depth, seed=seed)
    if not sd.ok:
        return Result("09_clock_category", False, {
            "objects": sd.objects_surjective, "homs": sd.hom_failures[:1],
            "functor": sd.functor_failures[:1], "fibres": sd.fibre_failures, "cartesian": sd.cartesian_failures[:1],
        })
    return Result("09_clock_category", True, detail=f"{iso.homs_checked} hom-sets; semidirect product equivalent")


def plump(unary_depth: int = 6, binary_depth: int = 3) -> Result:
    refl = wtypes.plump_poset(wtypes.unary_chain(), unary_depth)
    chain = order.chain(unary_depth)
    if not order.is_isomorphic(refl.as_wf(), chain):
        return Result("10_plump", False, {"unary": refl.as_wf()})
    binary = wtypes.plump_preorder(wtypes.binary_trees(), binary_depth)
    rep = order.is_compatible_wf(binary)
    if not rep.ok:
        return Result("10_plump", False, {"binary": [c.name for c in rep.failures()]})
    return Result("10_plump", True, detail=f"unary depth {unary_depth} is a {unary_depth}-chain; "
                  f"binary depth {binary_depth} ({len(binary.base.elements)} trees) is compatible")


def global_adequacy(max_size: int = MAX_POSET, values=(0, 1)) -> Result:
    covered = failed = 0
    first = None
    for w in _instances(max_size):
        if not order.adequacy_hypothesis(w):
            continue
        covered += 1
        if not order.check_global_adequacy(w, values):
            failed += 1
            if first is None or (not first.prec and w.prec):
                first = w
    antichain = order.WfRelation(order.antichain(2), frozenset())
    negative = not order.check_global_adequacy(antichain, values)
    ok = failed == 0 and negative
    detail = f"{covered - failed}/{covered} hypothesis instances adequate; antichain rejected: {negative}"
    return Result("11_global_adequacy", ok, None if ok else {"instance": first}, detail)


CRITERIA = {
    "01_loeb_soundness": loeb_soundness,
    "02_loeb_necessity": loeb_necessity,
    "03_fixpoints": fixpoints,
    "04_stream_programs": stream_programs,
    "05_force_iso": force_iso,
    "06_clock_irrelevance": clock_irrelevance,
    "07_classifying": classifying,
    "08_bag_counts": bag_counts,
    "09_clock_category": clock_category,
    "10_plump": plump,
    "11_global_adequacy": global_adequacy,
}


def timed(fn, **kwargs) -> Result:
    t0 = time.perf_counter()
    r = fn(**kwargs)
    r.elapsed = time.perf_counter() - t0
    return r


def run_suite(seed: int = 0, stages: int = 8, workers: int = 4, only=None) -> RunReport:
    report = RunReport("suite")
    names = [n for n in CRITERIA if only is None or n in only]
    seeded = {"03_fixpoints", "05_force_iso", "06_clock_irrelevance", "09_clock_category"}
    staged = {"03_fixpoints", "05_force_iso", "06_clock_irrelevance"}

    def job(name):
        kwargs = {}
        if name in seeded:
            kwargs["seed"] = seed
        if name in staged:
            kwargs["stages"] = stages
        return timed(CRITERIA[name], **kwargs)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for r in pool.map(job, names):
            report.add(r)
    return report.finish()
