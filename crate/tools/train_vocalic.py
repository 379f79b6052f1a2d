"""Offline trainer for the 25x10x4x5 vocalic fixture network.

Writes fixtures/vocalic.nnet. The bitmaps must stay in sync with the
`gen-bench` subcommand. Run: python3 tools/train_vocalic.py
"""
import itertools
import numpy as np

LETTERS = {
    "A": ["#####", "#...#", "#####", "#...#", "#...#"],
    "E": ["#####", "#....", "####.", "#....", "#####"],
    "I": ["#####", "..#..", "..#..", "..#..", "#####"],
    "O": ["#####", "#...#", "#...#", "#...#", "#####"],
    "U": ["#...#", "#...#", "#...#", "#...#", "#####"],
}
ORDER = "AEIOU"


def bitmap(rows):
    return np.array([1.0 if c == "#" else 0.0 for r in rows for c in r])


def dataset(rng, sigma=0.2):
    """100 noisy vocalics (Gaussian pixel noise) and 100 non-vocalic images."""
    xs, ys = [], []
    for k, c in enumerate(ORDER):
        b = bitmap(LETTERS[c])
        t = np.zeros(5)
        t[k] = 1.0
        for _ in range(20):
            xs.append(np.clip(b + rng.normal(0, sigma, 25), 0, 1))
            ys.append(t)
    for _ in range(100):
        xs.append((rng.random(25) < 0.5).astype(float))
        ys.append(np.zeros(5))
    return np.array(xs), np.array(ys)


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def train(seed):
    rng = np.random.default_rng(seed)
    X, Y = dataset(rng)
    sizes = [25, 10, 4, 5]
    W = [rng.normal(0, 1.0 / np.sqrt(a), (b, a)) for a, b in zip(sizes, sizes[1:])]
    B = [np.zeros(b) for b in sizes[1:]]
    params = W + B
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    lr = 0.03
    for step in range(1, 20001):
        acts = [X]
        for w, b in zip(W, B):
            acts.append(sig(acts[-1] @ w.T + b))
        out = acts[-1]
        delta = (out - Y)  # cross-entropy with sigmoid outputs
        grads_w, grads_b = [], []
        for l in reversed(range(3)):
            grads_w.insert(0, delta.T @ acts[l] / len(X))
            grads_b.insert(0, delta.mean(axis=0))
            if l > 0:
                delta = (delta @ W[l]) * acts[l] * (1 - acts[l])
        grads = grads_w + grads_b
        for i, (p, g) in enumerate(zip(params, grads)):
            m[i] = 0.9 * m[i] + 0.1 * g
            v[i] = 0.999 * v[i] + 0.001 * g * g
            mh = m[i] / (1 - 0.9 ** step)
            vh = v[i] / (1 - 0.999 ** step)
            p -= lr * mh / (np.sqrt(vh) + 1e-8)
    W = [np.round(w, 6) for w in W]
    B = [np.round(b, 6) for b in B]
    return W, B, X, Y


def lut_sig(u):
    idx = np.floor(u * 100 + 2000)
    out = sig((idx - 2000) / 100.0)
    out = np.where(idx < 0, 0.0, out)
    return np.where(idx >= 4000, 1.0, out)


def forward(W, B, x, act=lut_sig):
    a = x
    for w, b in zip(W, B):
        a = act(w @ a + b)
    return a


def classify(o, V=0.5):
    c = [i for i in range(len(o)) if o[i] >= V]
    if not c:
        return None
    return max(c, key=lambda i: (o[i], -i))


def write_nnet(path, W, B):
    sizes = [W[0].shape[1]] + [w.shape[0] for w in W]
    with open(path, "w") as f:
        f.write("// Vocalic 5x5 character recognizer (A, E, I, O, U), sigmoid on all layers\n")
        f.write("// Trained offline by tools/train_vocalic.py\n")
        f.write(f"{len(W)},{sizes[0]},{sizes[-1]},{max(sizes)},\n")
        f.write(",".join(map(str, sizes)) + ",\n")
        f.write("0,\n")
        f.write(",".join(["0"] * 25) + ",\n")
        f.write(",".join(["1"] * 25) + ",\n")
        f.write(",".join(["0"] * 26) + ",\n")
        f.write(",".join(["1"] * 26) + ",\n")
        for w, b in zip(W, B):
            for row in w:
                f.write(",".join(f"{x:.6f}" for x in row) + ",\n")
            for x in b:
                f.write(f"{x:.6f},\n")


if __name__ == "__main__":
    import sys
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
    W, B, X, Y = train(seed)
    ok = 0
    for x, y in zip(X, Y):
        want = int(np.argmax(y)) if y.max() > 0 else None
        ok += classify(forward(W, B, x)) == want
    print("train acc", ok / len(X))
    a = bitmap(LETTERS["A"])
    for c in ORDER:
        print(c, classify(forward(W, B, bitmap(LETTERS[c]))), np.round(forward(W, B, bitmap(LETTERS[c])), 3))
    nadv = 0
    for k in (1, 2):
        for idx in itertools.combinations(range(25), k):
            v = a.copy()
            v[list(idx)] = 1 - v[list(idx)]
            o = forward(W, B, v)
            if o[0] < 0.5 and any(o[i] >= 0.5 for i in range(1, 5)):
                nadv += 1
                if nadv <= 3:
                    print("adversarial", idx, np.round(o, 3))
    print("adversarial count", nadv)
    write_nnet("fixtures/vocalic.nnet", W, B)
