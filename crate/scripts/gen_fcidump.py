"""Generate the FCIDUMP fixtures under data/ (requires pyscf).

Linear hydrogen chains in the STO-6G basis, canonical RHF orbitals,
no point-group symmetry. Prints reference RHF/FCI/MP2 numbers.
"""
import os
import sys

from pyscf import fci, gto, mp, scf
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def chain(n_atoms, spacing):
    atoms = [("H", (0.0, 0.0, i * spacing)) for i in range(n_atoms)]
    mol = gto.M(atom=atoms, basis="sto-6g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    return mol, mf


def main():
    cases = [("h2_0.735", 2, 0.735)]
    cases += [(f"h4_{r:.2f}", 4, r) for r in (1.00, 1.50, 2.00)]
    cases += [("h6_2.00", 6, 2.00)]
    for label, n, r in cases:
        mol, mf = chain(n, r)
        path = os.path.join(OUT, f"{label}.fcidump")
        fcidump.from_scf(mf, path, tol=1e-15)
        e_fci = fci.FCI(mf).kernel()[0]
        pt = mp.MP2(mf).run()
        print(f"{label}: e_rhf={mf.e_tot:.12f} e_fci={e_fci:.12f} "
              f"e_mp2={pt.e_tot:.12f} t2[0,0,0,0]={pt.t2[0,0,0,0]:.12f} "
              f"mo_energy={list(mf.mo_energy)}")


if __name__ == "__main__":
    sys.exit(main())
