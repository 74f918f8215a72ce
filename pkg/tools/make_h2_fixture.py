"""Regenerate tests/data/h2_sto6g.fcidump (requires pyscf, not a package dependency)."""

from pyscf import gto, scf
from pyscf.tools import fcidump

mol = gto.M(atom="H 0 0 0; H 0 0 0.7414", basis="sto-6g", unit="Angstrom")
mf = scf.RHF(mol).run()
fcidump.from_scf(mf, "tests/data/h2_sto6g.fcidump", tol=1e-15)
