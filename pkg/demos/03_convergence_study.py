"""
Histogram versus moment convergence
===================================

Run the bar campaign at n, 4n and 16n realizations on shared bins and
compare successive estimates. The PDF residue shrinks slowly while the
mean and standard deviation settle almost immediately.

Takes a couple of minutes on one core.
"""
from splitmc import BarProblem, RunConfig
from splitmc.studies import convergence_study

config = RunConfig(n_mc=4096, n_serial=256, n_workers=4, base_seed=2013, problem=BarProblem())
study = convergence_study(config, [4096, 16384, 65536], tolerance=0.05)

for p, m, s in zip(study.pdf_residues, study.mean_residues, study.std_residues):
    print(f"{p.n_small:>6} -> {p.n_large:<6} pdf {p.residue:.4f} (converged={p.converged})"
          f"  mean {m.residue:.2e}  std {s.residue:.2e}")

study.write("convergence-out")
