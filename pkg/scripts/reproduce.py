"""Rerun the figure experiments and write plot-ready tables.

    python3 scripts/reproduce.py fig4 --out results
    python3 scripts/reproduce.py all

Every figure writes per-point CSVs and a summary.json through the same
writer as the CLI, then prints the figure-level numbers it is judged by.
"""
import argparse
import warnings
from pathlib import Path

import numpy as np

from lambda_memory import io as lio
from lambda_memory import scenarios as sc


def _scan(start, stop, step):
    return list(np.round(np.arange(start, stop + 0.5 * step, step), 6))


def fig3(out: Path):
    cfg = sc.fig3()
    rows = []
    for d in (-1.10, -1.0, 0.0):
        row = sc.spectral_overlap(cfg, d)
        row["carrier_offset"] = d
        rows.append(row)
    lio.write_outputs(rows, out, "spectrum", "preset=fig3")
    om, chi2 = rows[0]["Omega"], rows[0]["chi_double_prime"]
    near = (om > -2.0) & (om < 0.0)
    print(f"fig3: field-pole absorption peak at {om[near][np.argmax(chi2[near])]:+.3f} from two-photon resonance")


def fig4(out: Path):
    cfg = sc.fig4()
    pts = sc.run_transmission_scan(cfg, _scan(-1.40, -0.60, 0.02))
    lio.write_outputs(pts, out, "transmit", "preset=fig4", cfg.schedule)
    fwhm = sc.fwhm_of_gaussian_probe(cfg.probe)
    best = sc.best_delayed(pts, 0.5 * fwhm)
    print(f"fig4: best delayed T = {best.report.transmittance:.3f} at {best.carrier_offset:+.2f} "
          f"(delay {best.report.delay:.2f})")
    for p in pts:
        if abs(p.carrier_offset + 1.10) < 1e-9:
            print(f"fig4: on-peak output has {sc.count_peaks(p.output.t, p.output.intensity)} peaks")


def fig5(out: Path):
    cfg = sc.fig5()
    pts = sc.run_store_retrieve(cfg, _scan(-1.10, -0.98, 0.02), with_coherence=False)
    lio.write_outputs(pts, out, "store-retrieve", "preset=fig5", cfg.schedule)
    best = max(pts, key=lambda p: p.report.retrieval_efficiency)
    ref = sc.uninterrupted_reference(cfg, best.carrier_offset)
    overlap = sc.tail_overlap(ref, cfg.schedule.write.t_off, best.read_output, cfg.schedule.read.t_on)
    print(f"fig5: best R = {best.report.retrieval_efficiency:.4f} at {best.carrier_offset:+.2f}, "
          f"T = {best.report.transmittance:.3f}, tail overlap {overlap:.4f}")


def fig6(out: Path):
    cfg = sc.fig6()
    pts = sc.run_transmission_scan(cfg, [-7.5, -3.0, 0.0, 3.0, 7.5])
    lio.write_outputs(pts, out, "transmit", "preset=fig6", cfg.schedule)
    for p in pts:
        print(f"fig6: {p.carrier_offset:+.2f}  T = {p.report.transmittance:.3f}  osc = {p.report.oscillation_freq:.2f}")


def fig7(out: Path):
    cfg = sc.fig7()
    pts = sc.run_store_retrieve(cfg, [-7.5, 0.0, 7.5], with_coherence=False)
    lio.write_outputs(pts, out, "store-retrieve", "preset=fig7", cfg.schedule)
    k = int(np.searchsorted(cfg.grid.t, cfg.schedule.read.t_on))
    for p in pts:
        late = p.write_output.intensity[k:] + p.read_output.intensity[k:]
        f = p.report.oscillation_freq
        tau = sc.damping_time(cfg.grid.t[k:], late, f) if f > 0 else float("nan")
        print(f"fig7: {p.carrier_offset:+.2f}  R = {p.report.retrieval_efficiency:.4f}  osc = {f:.2f}  damping = {tau:.2f}")


FIGURES = {"fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("figure", choices=[*FIGURES, "all"])
    parser.add_argument("--out", default="results", type=Path)
    args = parser.parse_args()
    warnings.simplefilter("ignore")
    names = list(FIGURES) if args.figure == "all" else [args.figure]
    for name in names:
        FIGURES[name](args.out / name)


if __name__ == "__main__":
    main()
