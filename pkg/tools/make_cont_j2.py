"""Generate datasets/cont_j2_n2.json (contact pseudo-group on J^2, n = 2)."""
import itertools
import json
import sys
from pathlib import Path

R = (1, 2)


def sym(*idx):
    return "".join(str(i) for i in sorted(idx))


def main(out):
    coords = ["x1", "x2", "u", "p1", "p2", "p11", "p12", "p22",
              "a", "g1", "g2", "B11", "B12", "B21", "B22", "c1", "c2",
              "f11", "f12", "f22", "s11", "s12", "s22"]
    coords += ["w%d_%s" % (k, sym(i, j)) for k in R for i, j in [(1, 1), (1, 2), (2, 2)]]
    coords += ["z" + s for s in ("111", "112", "122", "222")]
    defs = {"det": "B11*B22 - B12*B21",
            "b11": "B22/det", "b12": "-B12/det", "b21": "-B21/det", "b22": "B11/det"}
    forms = [{"name": "Th0", "terms": [["a", "du"], ["-a*p1", "dx1"], ["-a*p2", "dx2"]]}]
    for i in R:
        terms = [["g%d" % i, "Th0"]]
        for k in R:
            terms.append(["a*B%d%d" % (k, i), "dp%d" % k])
            for l in R:
                terms.append(["-a*B%d%d*p%s" % (k, i, sym(k, l)), "dx%d" % l])
        forms.append({"name": "Th%d" % i, "terms": terms})
    for i in R:
        terms = [["c%d" % i, "Th0"]]
        terms += [["f%s" % sym(i, k), "Th%d" % k] for k in R]
        terms += [["b%d%d" % (i, k), "dx%d" % k] for k in R]
        forms.append({"name": "Xi%d" % i, "terms": terms})
    for i, j in [(1, 1), (1, 2), (2, 2)]:
        terms = [["s%s" % sym(i, j), "Th0"]]
        terms += [["w%d_%s" % (k, sym(i, j)), "Th%d" % k] for k in R]
        terms += [["z%s" % sym(i, j, k), "Xi%d" % k] for k in R]
        for k, l in itertools.product(R, R):
            terms.append(["a*B%d%d*B%d%d" % (k, i, l, j), "dp%s" % sym(k, l)])
        forms.append({"name": "Sig%s" % sym(i, j), "terms": terms})

    phi = lambda k, i: "Phi%d_%d" % (k, i)
    unknowns = ["Phi0_0"] + ["Phi0_%d" % i for i in R] + [phi(k, i) for k in R for i in R]
    unknowns += ["Psi%d0" % i for i in R] + ["Psi%d%d" % (i, k) for i in R for k in R]
    pairs = [(1, 1), (1, 2), (2, 2)]
    unknowns += ["Ups0_%s" % sym(i, j) for i, j in pairs]
    unknowns += ["Ups%d_%s" % (k, sym(i, j)) for k in R for i, j in pairs]
    unknowns += ["Lam%s_%d" % (sym(i, j), k) for i, j in pairs for k in R]

    claims = [{"target": "Th0", "terms": [["1", "Phi0_0", "Th0"]] + [["1", "Xi%d" % i, "Th%d" % i] for i in R]}]
    for i in R:
        t = [["1", "Phi0_%d" % i, "Th0"]]
        t += [["1", phi(k, i), "Th%d" % k] for k in R]
        t += [["1", "Xi%d" % k, "Sig%s" % sym(i, k)] for k in R]
        claims.append({"target": "Th%d" % i, "terms": t})
    for i in R:
        t = [["1", "Phi0_0", "Xi%d" % i]]
        t += [["-1", phi(i, k), "Xi%d" % k] for k in R]
        t += [["1", "Psi%d0" % i, "Th0"]]
        t += [["1", "Psi%d%d" % (i, k), "Th%d" % k] for k in R]
        claims.append({"target": "Xi%d" % i, "terms": t})
    for i, j in pairs:
        t = []
        for k in R:
            t.append(["1", phi(k, i), "Sig%s" % sym(k, j)])
            t.append(["1", phi(k, j), "Sig%s" % sym(i, k)])
        t.append(["-1", "Phi0_0", "Sig%s" % sym(i, j)])
        t.append(["1", "Ups0_%s" % sym(i, j), "Th0"])
        t += [["1", "Ups%d_%s" % (k, sym(i, j)), "Th%d" % k] for k in R]
        t += [["1", "Lam%s_%d" % (sym(i, j), k), "Xi%d" % k] for k in R]
        claims.append({"target": "Sig%s" % sym(i, j), "terms": t})
    data = {
        "name": "cont_j2_n2",
        "version": 1,
        "description": "Maurer-Cartan forms of the pseudo-group of contact transformations of J^2 for n = 2, with every auxiliary form (Phi, Psi, Ups, Lam) treated as an unknown. B is the primary parameter matrix (B<k><i> = B^k_i) and b = B^(-1). Generated by tools/make_cont_j2.py.",
        "coordinates": coords,
        "constants": [],
        "definitions": defs,
        "forms": forms,
        "unknowns": unknowns,
        "claims": claims,
    }
    Path(out).write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/cartan_lab/datasets/cont_j2_n2.json")
