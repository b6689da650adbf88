#!/usr/bin/env python3
"""Regenerates the golden end-to-end fixtures in tests/data.

Writes a small VCF + manifest + region map, and the exact files a scan over
them must produce (results.tsv, qc_summary.tsv, summary.tsv, and the
frequency-table export).  Expected values are computed here by an
independent implementation of the estimators and Wald statistics whose
floating-point evaluation order mirrors the library operation for
operation, so the committed TSVs are byte-comparable with the scanner's
output at any worker count.  Tail probabilities come from mpmath at high
precision; the script refuses to emit a fixture whose printed p-value
mantissa sits on a rounding knife edge.

Run from the repository root:  python3 scripts/make_golden_fixtures.py
"""

import math
import os

import mpmath

mpmath.mp.dps = 60

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "data")

N_PER = 100  # samples per (population, sex) present in the VCF


# ---------------------------------------------------------------------------
# mirrored arithmetic (must match the library's evaluation order exactly)
# ---------------------------------------------------------------------------

def est_diploid(bb, het, BB):
    n = bb + het + BB
    p = float(2 * BB + het) / float(2 * n)
    delta = float(BB) / float(n) - p * p
    return p, delta, n


def est_haploid(b, B):
    n = b + B
    return float(B) / float(n), n


def var_diploid(p, delta, n):
    s = p * (1.0 - p) + delta
    return max(0.0, s) / (2.0 * n)


def var_haploid(p, n):
    return p * (1.0 - p) / float(n)


def pair_terms(stratum):
    """(d, v) for one population: female minus male frequency, variance sum."""
    pf, df_, nf = est_diploid(*stratum["f"])
    vf = var_diploid(pf, df_, nf)
    if "m_hap" in stratum:
        pm, nm = est_haploid(*stratum["m_hap"])
        vm = var_haploid(pm, nm)
    else:
        pm, dm, nm = est_diploid(*stratum["m"])
        vm = var_diploid(pm, dm, nm)
    return pf - pm, vf + vm


def single_w(stratum):
    d, v = pair_terms(stratum)
    if v == 0.0:
        return 0.0 if d == 0.0 else None
    return (d * d) / v


def multi_w(strata):
    acc = 0.0
    for s in strata:
        w = single_w(s)
        if w is None:
            return None
        acc += w
    return acc


def pooled_stratum(strata):
    out = {"f": [0, 0, 0]}
    hap = "m_hap" in strata[0]
    out["m_hap" if hap else "m"] = [0, 0] if hap else [0, 0, 0]
    key = "m_hap" if hap else "m"
    for s in strata:
        for i in range(3):
            out["f"][i] += s["f"][i]
        for i in range(len(out[key])):
            out[key][i] += s[key][i]
    return out


def pair_w(a, b):
    ta_d, ta_v = pair_terms(a)
    tb_d, tb_v = pair_terms(b)
    num = ta_d - tb_d
    den = ta_v + tb_v
    if den == 0.0:
        return 0.0 if num == 0.0 else None
    return (num * num) / den


def omnibus(strata):
    """(W, df, used, excluded); W None when untestable."""
    terms = [pair_terms(s) for s in strata]
    usable = [k for k, (_, v) in enumerate(terms) if v > 0.0]
    used, excl = len(usable), len(terms) - len(usable)
    if used < 2:
        return None, 0, used, excl
    if used == 2:
        ta_d, ta_v = terms[usable[0]]
        tb_d, tb_v = terms[usable[1]]
        num = ta_d - tb_d
        den = ta_v + tb_v
        return (num * num) / den, 1, used, excl
    weight_sum = 0.0
    weighted_d = 0.0
    for k in usable:
        u = 1.0 / terms[k][1]
        weight_sum += u
        weighted_d += terms[k][0] * u
    mean_d = weighted_d / weight_sum
    w = 0.0
    for k in usable:
        u = 1.0 / terms[k][1]
        dd = terms[k][0] - mean_d
        w += u * (dd * dd)
    return w, used - 1, used, excl


# ---------------------------------------------------------------------------
# tail probabilities and text formatting
# ---------------------------------------------------------------------------

def neg_log10_sf(w, df):
    """-log10 of the upper chi-square tail, to float64, plus p as float."""
    if w == 0.0:
        return 0.0, 1.0
    q = mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(w) / 2, mpmath.inf,
                        regularized=True)
    neg = -mpmath.log10(q)
    # Refuse mantissa knife edges: the 6-digit mantissa the library prints
    # must not depend on sub-ulp differences between its tail evaluation
    # and this one.
    # printed mantissa = 10^(frac'), frac' = (-neg) - floor(-neg) = 1 - frac
    frac = neg - mpmath.floor(neg)
    scaled = mpmath.mpf(10) ** (1 - frac + 5)  # mantissa * 1e5, %.5f granularity
    dist = abs(scaled - mpmath.floor(scaled) - mpmath.mpf("0.5"))
    if dist < mpmath.mpf("1e-3"):
        raise SystemExit(f"fixture p-value mantissa on a rounding edge (w={w}, df={df})")
    return float(neg), float(q)


def format_double(v, sig=6):
    return f"%.{sig}g" % v


def format_pvalue(neg_log10_p):
    if not math.isfinite(neg_log10_p):
        return "NA"
    e = math.floor(-neg_log10_p)
    m = 10.0 ** (-neg_log10_p - e)
    mbuf = "%.5f" % m
    if mbuf[0] == "1" and mbuf[1] == "0":
        e += 1
        mbuf = "%.5f" % 1.0
    return "%se%+03d" % (mbuf, int(e))


def test_cells(w, df, with_df):
    if w is None:
        return ["NA", "NA", "NA"] if with_df else ["NA", "NA"]
    neg, _ = neg_log10_sf(w, df)
    cells = [format_double(w, 12)]
    if with_df:
        cells.append(str(df))
    cells.append(format_pvalue(neg))
    return cells


# ---------------------------------------------------------------------------
# fixture definition
# ---------------------------------------------------------------------------

# Genotype tallies are ALT-oriented as written in the VCF; the mirror below
# re-orients to the whole-sample minor allele exactly as the reader does.
#
# f: (ref-hom, het, alt-hom) female counts      [missing fills the rest]
# m: same for diploid males;  m_hap: (ref, alt) tokens for hemizygous males
# m_tokens: explicit per-sample male tokens (overrides m/m_hap in the VCF)

VARIANTS = [
    dict(chrom="chr7", pos=2000, vid="rs_v2", ref="A", alt="C",
         A=dict(f=(36, 48, 16), m=(49, 42, 9)),
         B=dict(f=(36, 48, 16), m=(49, 42, 9))),
    dict(chrom="chr7", pos=3000, vid="rs_v3", ref="G", alt="T",
         A=dict(f=(36, 48, 16), m=(49, 42, 9)),
         B=dict(f=(49, 42, 9), m=(36, 48, 16))),
    dict(chrom="chr7", pos=6000, vid="rs_v9", ref="A", alt="C,G",  # multiallelic
         A=dict(f=(100, 0, 0), m=(100, 0, 0)),
         B=dict(f=(100, 0, 0), m=(100, 0, 0))),
    dict(chrom="chr7", pos=7000, vid="rs_v10", ref="AT", alt="A",  # not a SNP
         A=dict(f=(100, 0, 0), m=(100, 0, 0)),
         B=dict(f=(100, 0, 0), m=(100, 0, 0))),
    dict(chrom="chr7", pos=8000, vid="rs_v12", ref="C", alt="T",
         A=dict(f=(10, 20, 70), m=(15, 10, 75)),          # flips orientation,
         B=dict(f=(5, 30, 65), m=(10, 25, 65))),          # carries HW departure
    dict(chrom="chr7", pos=9000, vid="rs_v13", ref="A", alt="C",
         A=dict(f=(25, 50, 25), m=(90, 10, 0)),           # strongly significant
         B=dict(f=(25, 50, 25), m=(25, 50, 25))),
    dict(chrom="chr7", pos=9500, vid="rs_v14", ref="A", alt="C",
         A=dict(f=(25, 50, 25), m=(90, 10, 0)),           # opposite directions:
         B=dict(f=(90, 10, 0), m=(25, 50, 25))),          # stratified-only hit
    dict(chrom="chrX", pos=10500, vid="rs_v5", ref="A", alt="G",
         A=dict(f=(30, 50, 19), f_missing=1, m=(50, 40, 10)),
         B=dict(f=(40, 40, 20), m=(45, 40, 15))),         # diploid males: PAR
    dict(chrom="chrX", pos=3000000, vid="rs_v6", ref="T", alt="C",
         A=dict(f=(36, 48, 16), m_hap=(70, 30)),
         B=dict(f=(49, 42, 9), m_hap=(60, 40))),
    dict(chrom="chrX", pos=4000000, vid="rs_v7", ref="A", alt="C",
         A=dict(f=(25, 50, 25), m_hap=(60, 38), m_excluded=2,
                m_tokens=["0"] * 40 + ["1"] * 28 + ["0/0"] * 20 + ["1/1"] * 10
                         + ["0/1"] * 2),
         B=dict(f=(25, 50, 25), m_hap=(60, 40),
                m_tokens=["0"] * 50 + ["1"] * 30 + ["0/0"] * 10 + ["1/1"] * 10)),
    dict(chrom="chrX", pos=5000000, vid="rs_v8", ref="A", alt="G",
         A=dict(f=(10, 40, 50), m_hap=(30, 70)),          # flips orientation
         B=dict(f=(9, 42, 49), m_hap=(35, 65))),
    dict(chrom="chrX", pos=6000000, vid="rs_v11", ref="G", alt="A",
         A=dict(f=(100, 0, 0), m_hap=(100, 0)),           # fails POPA's MAF filter
         B=dict(f=(49, 42, 9), m_hap=(60, 40))),
]

MAF_THRESHOLD = 0.05
SIGNIFICANCE = 5e-8
POPS = ["POPA", "POPB"]


def sample_names():
    a_f = [f"A_F{i:03d}" for i in range(1, N_PER + 1)]
    a_m = [f"A_M{i:03d}" for i in range(1, N_PER + 1)]
    b_f = [f"B_F{i:03d}" for i in range(1, N_PER + 1)]
    b_m = [f"B_M{i:03d}" for i in range(1, N_PER + 1)]
    return a_f, a_m, b_f, b_m


def write_manifest(path):
    a_f, a_m, b_f, b_m = sample_names()
    lines = ["sample_id\tsex\tpopulation"]
    lines += [f"{s}\tfemale\tPOPA" for s in a_f]
    # present in the manifest but never genotyped: exercises missingness
    lines.append("MISSING1\tfemale\tPOPA")
    lines += [f"{s}\tmale\tPOPA" for s in a_m]
    lines += [f"{s}\tfemale\tPOPB" for s in b_f]
    lines += [f"{s}\tmale\tPOPB" for s in b_m]
    with open(path, "w") as out:
        out.write("\n".join(lines) + "\n")


def write_regions(path):
    with open(path, "w") as out:
        out.write("# chrX pseudoautosomal bands, build 38\n")
        out.write("chrX\t10000\t2781479\tPAR\n")
        out.write("chrX\t155701382\t156030895\tPAR\n")


def diploid_tokens(counts, missing=0):
    bb, het, BB = counts
    toks = ["0/0"] * bb + ["0/1"] * het + ["1/1"] * BB + ["./."] * missing
    assert len(toks) == N_PER, f"{counts} + {missing} missing != {N_PER}"
    return toks


def male_tokens(stratum):
    if "m_tokens" in stratum:
        toks = stratum["m_tokens"]
        assert len(toks) == N_PER
        return toks
    if "m_hap" in stratum:
        b, B = stratum["m_hap"]
        toks = ["0"] * b + ["1"] * B
        assert len(toks) == N_PER
        return toks
    return diploid_tokens(stratum["m"])


def write_vcf(path):
    a_f, a_m, b_f, b_m = sample_names()
    cols = a_f + a_m + b_f + b_m + ["EXTRA1"]  # EXTRA1 is not in the manifest
    lines = ["##fileformat=VCFv4.2",
             "##source=golden-fixture-generator",
             "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\t" + "\t".join(cols)]
    for v in VARIANTS:
        toks = (diploid_tokens(v["A"]["f"], v["A"].get("f_missing", 0))
                + male_tokens(v["A"])
                + diploid_tokens(v["B"]["f"], v["B"].get("f_missing", 0))
                + male_tokens(v["B"])
                + ["0/0"])
        lines.append(f'{v["chrom"]}\t{v["pos"]}\t{v["vid"]}\t{v["ref"]}\t{v["alt"]}'
                     f"\t.\tPASS\t.\tGT\t" + "\t".join(toks))
    with open(path, "w") as out:
        out.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# the expected scan output
# ---------------------------------------------------------------------------

def region_of(v):
    if v["chrom"] != "chrX":
        return "autosomal"
    pos = v["pos"]
    if 10000 < pos <= 2781479 or 155701382 < pos <= 156030895:
        return "par"
    return "npr"


def oriented_strata(v, region):
    """Alt-oriented tallies -> minor-oriented strata dicts, or None if
    the variant never reaches the tally stage."""
    if "," in v["alt"]:
        return None, "multiallelic"
    if len(v["ref"]) != 1 or len(v["alt"]) != 1:
        return None, "non_snp"

    strata = []
    for pop_key in ("A", "B"):
        src = v[pop_key]
        s = {"f": list(src["f"])}
        if region == "npr":
            s["m_hap"] = list(src["m_hap"])
        else:
            s["m"] = list(src["m"])
        strata.append(s)

    alt_alleles = 0
    total_alleles = 0
    for s in strata:
        alt_alleles += 2 * s["f"][2] + s["f"][1]
        total_alleles += 2 * sum(s["f"])
        if "m_hap" in s:
            alt_alleles += s["m_hap"][1]
            total_alleles += sum(s["m_hap"])
        else:
            alt_alleles += 2 * s["m"][2] + s["m"][1]
            total_alleles += 2 * sum(s["m"])
    minor_is_alt = 2 * alt_alleles <= total_alleles
    if not minor_is_alt:
        for s in strata:
            s["f"] = [s["f"][2], s["f"][1], s["f"][0]]
            if "m_hap" in s:
                s["m_hap"] = [s["m_hap"][1], s["m_hap"][0]]
            else:
                s["m"] = [s["m"][2], s["m"][1], s["m"][0]]
    return (strata, minor_is_alt), None


def record_mafs(strata):
    pop_maf = []
    minor_all = 0
    total_all = 0
    for s in strata:
        minor = 2 * s["f"][2] + s["f"][1]
        tot = 2 * sum(s["f"])
        if "m_hap" in s:
            minor += s["m_hap"][1]
            tot += sum(s["m_hap"])
        else:
            minor += 2 * s["m"][2] + s["m"][1]
            tot += 2 * sum(s["m"])
        minor_all += minor
        total_all += tot
        pop_maf.append(0.0 if tot == 0 else float(min(minor, tot - minor)) / float(tot))
    sample_maf = (0.0 if total_all == 0
                  else float(min(minor_all, total_all - minor_all)) / float(total_all))
    return pop_maf, sample_maf


def result_header():
    cols = ["chrom", "pos", "id", "ref", "alt", "minor_allele", "region", "maf"]
    for p in POPS:
        cols += [f"{p}_n_f", f"{p}_n_m", f"{p}_f_bb", f"{p}_f_bB", f"{p}_f_BB",
                 f"{p}_m_bb", f"{p}_m_bB", f"{p}_m_BB", f"{p}_pf", f"{p}_pm",
                 f"{p}_delta_f", f"{p}_delta_m", f"{p}_sdmaf", f"{p}_single_p"]
    cols += ["multi_W", "multi_df", "multi_p", "pooled_W", "pooled_p",
             "POPB_vs_POPA_W", "POPB_vs_POPA_p", "omnibus_W", "omnibus_df", "omnibus_p"]
    return "\t".join(cols)


def build_rows():
    """Returns (result rows, freq rows, qc dict, summary lines)."""
    qc = dict(variants_read=0, skipped_multiallelic=0, skipped_non_snp=0,
              malformed_skipped=0, filtered_maf=0, het_male_excluded=0,
              variants_tested=0)
    rows = []
    freq_rows = []
    significant = {}
    multi_only = []
    pooled_only = []
    n_rows = 0

    for v in VARIANTS:
        qc["variants_read"] += 1
        region = region_of(v)
        oriented, skip = oriented_strata(v, region)
        if skip == "multiallelic":
            qc["skipped_multiallelic"] += 1
            continue
        if skip == "non_snp":
            qc["skipped_non_snp"] += 1
            continue
        strata, minor_is_alt = oriented
        # heterozygous diploid male calls in hemizygous regions are
        # excluded from the tallies but still counted
        for pop_key in ("A", "B"):
            qc["het_male_excluded"] += v[pop_key].get("m_excluded", 0)

        pop_maf, sample_maf = record_mafs(strata)
        if any(m < MAF_THRESHOLD for m in pop_maf):
            qc["filtered_maf"] += 1
            continue
        qc["variants_tested"] += 1
        n_rows += 1

        cells = [v["chrom"], str(v["pos"]), v["vid"], v["ref"], v["alt"],
                 v["alt"] if minor_is_alt else v["ref"], region,
                 format_double(sample_maf)]

        singles = []
        for s in strata:
            nf = sum(s["f"])
            nm = sum(s["m_hap"]) if "m_hap" in s else sum(s["m"])
            cells += [str(nf), str(nm), str(s["f"][0]), str(s["f"][1]), str(s["f"][2])]
            if "m_hap" in s:
                cells += [str(s["m_hap"][0]), "NA", str(s["m_hap"][1])]
            else:
                cells += [str(s["m"][0]), str(s["m"][1]), str(s["m"][2])]
            # all golden strata are populated, so estimates always print
            pf, df_, _ = est_diploid(*s["f"])
            if "m_hap" in s:
                pm, _nm = est_haploid(*s["m_hap"])
                dm_text = "NA"
            else:
                pm, dm, _nm = est_diploid(*s["m"])
                dm_text = format_double(dm)
            cells += [format_double(pf), format_double(pm), format_double(df_),
                      dm_text, format_double(pf - pm)]
            w = single_w(s)
            singles.append(w)
            if w is None:
                cells.append("NA")
            else:
                neg, p = neg_log10_sf(w, 1)
                cells.append(format_pvalue(neg))
                if p < SIGNIFICANCE:
                    key = "single_" + POPS[len(singles) - 1]
                    significant[key] = significant.get(key, 0) + 1

        mw = multi_w(strata)
        cells += test_cells(mw, 2, True)
        multi_sig = False
        if mw is not None:
            _, p = neg_log10_sf(mw, 2)
            multi_sig = p < SIGNIFICANCE
            if multi_sig:
                significant["multi"] = significant.get("multi", 0) + 1

        pw = single_w(pooled_stratum(strata))
        cells += test_cells(pw, 1, False)
        pooled_sig = False
        if pw is not None:
            _, p = neg_log10_sf(pw, 1)
            pooled_sig = p < SIGNIFICANCE
            if pooled_sig:
                significant["pooled"] = significant.get("pooled", 0) + 1

        if multi_sig and not pooled_sig:
            multi_only.append(v["vid"])
        if pooled_sig and not multi_sig:
            pooled_only.append(v["vid"])

        prw = pair_w(strata[1], strata[0])  # POPB against the POPA baseline
        cells += test_cells(prw, 1, False)
        if prw is not None:
            _, p = neg_log10_sf(prw, 1)
            if p < SIGNIFICANCE:
                key = "pair_POPB_vs_POPA"
                significant[key] = significant.get(key, 0) + 1

        ow, odf, _, _ = omnibus(strata)
        cells += test_cells(ow, odf, True)
        if ow is not None:
            _, p = neg_log10_sf(ow, odf)
            if p < SIGNIFICANCE:
                significant["omnibus"] = significant.get("omnibus", 0) + 1

        rows.append("\t".join(cells))

        for k, s in enumerate(strata):
            nf = sum(s["f"])
            fr = [v["vid"], region, POPS[k]]
            fr += [format_double(float(c) / float(nf), 10) for c in s["f"]]
            if "m_hap" in s:
                nm = sum(s["m_hap"])
                fr += [format_double(float(s["m_hap"][0]) / float(nm), 10), "NA",
                       format_double(float(s["m_hap"][1]) / float(nm), 10)]
            else:
                nm = sum(s["m"])
                fr += [format_double(float(c) / float(nm), 10) for c in s["m"]]
            freq_rows.append("\t".join(fr))

    summary_lines = ["key\tvalue", f"variants_tested\t{n_rows}"]
    keys = (["multi", "pooled", "omnibus"]
            + [f"single_{p}" for p in POPS]
            + ["pair_POPB_vs_POPA"])
    for key in keys:
        summary_lines.append(f"significant_{key}\t{significant.get(key, 0)}")
    summary_lines.append(f"multi_only_count\t{len(multi_only)}")
    summary_lines.append(f"pooled_only_count\t{len(pooled_only)}")
    summary_lines.append("multi_only_ids\t" + ",".join(multi_only))
    summary_lines.append("pooled_only_ids\t" + ",".join(pooled_only))
    return rows, freq_rows, qc, summary_lines


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    write_manifest(os.path.join(OUT_DIR, "golden_manifest.tsv"))
    write_regions(os.path.join(OUT_DIR, "golden_regions.bed"))
    write_vcf(os.path.join(OUT_DIR, "golden.vcf"))

    rows, freq_rows, qc, summary_lines = build_rows()
    with open(os.path.join(OUT_DIR, "golden_scan.tsv"), "w") as out:
        out.write(result_header() + "\n")
        out.write("\n".join(rows) + "\n")
    with open(os.path.join(OUT_DIR, "golden_freq_table.tsv"), "w") as out:
        out.write("variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB"
                  "\tmale_bb\tmale_bB\tmale_BB\n")
        out.write("\n".join(freq_rows) + "\n")
    with open(os.path.join(OUT_DIR, "golden_qc_summary.tsv"), "w") as out:
        out.write("variants_read\tskipped_multiallelic\tskipped_non_snp\t"
                  "malformed_skipped\tfiltered_maf\thet_male_excluded\tvariants_tested\n")
        out.write("\t".join(str(qc[k]) for k in
                            ["variants_read", "skipped_multiallelic", "skipped_non_snp",
                             "malformed_skipped", "filtered_maf", "het_male_excluded",
                             "variants_tested"]) + "\n")
    with open(os.path.join(OUT_DIR, "golden_summary.tsv"), "w") as out:
        out.write("\n".join(summary_lines) + "\n")
    print(f"wrote fixtures to {os.path.normpath(OUT_DIR)}: "
          f"{qc['variants_tested']} result rows, qc={qc}")


if __name__ == "__main__":
    main()
