"""Optional matplotlib figures for CLI reports, written straight to files."""


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_tree_leaves(tree, path):
    """Bar chart of leaf path probabilities, leaves in enumeration order."""
    plt = _pyplot()
    leaves = tree.leaves()
    labels = ["".join("+" if lam > 0 else "-" for lam in leaf.lambdas) or "root" for leaf in leaves]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.3 * len(leaves)), 3.5))
    ax.bar(range(len(leaves)), [leaf.probability for leaf in leaves], color="0.4")
    if len(leaves) <= 64:
        ax.set_xticks(range(len(leaves)))
        ax.set_xticklabels(labels, rotation=90, fontsize=7, family="monospace")
    ax.set_xlabel("eigenvalue history")
    ax.set_ylabel("path probability")
    ax.set_title(f"toy universe, depth {tree.depth}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_epr_table(exact, counts, path):
    """Exact joint probabilities next to sampled frequencies for the four sign pairs."""
    plt = _pyplot()
    keys = ["++", "+-", "-+", "--"]
    total = sum(counts.values()) or 1
    xs = range(len(keys))
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.bar([x - 0.2 for x in xs], [exact[k] for k in keys], width=0.4, label="exact", color="0.3")
    ax.bar([x + 0.2 for x in xs], [counts[k] / total for k in keys], width=0.4, label="sampled", color="0.7")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(keys)
    ax.set_xlabel("(electron, positron) signs")
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
