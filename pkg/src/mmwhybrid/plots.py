"""Render sweep results to PNG figures next to the CSV outputs.

Each renderer takes the list of row dicts that the CLI writes to CSV,
so figures always agree with the tabulated numbers.  Styling is kept
minimal; the CSVs remain the primary artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_ARCH_COLOR = {"FC": "tab:blue", "OSPS": "tab:red"}
_SCHEME_STYLE = {"bst": "-", "bzf_p1": "--", "bzf_p2": "-.", "bzf_p3": ":", "nnls": "-"}


def _series(rows, keys):
    """Group rows by the tuple of ``keys``, preserving row order."""
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def plot_ba(rows, path: str):
    """Detection probability vs number of beacon slots, per architecture."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for (arch,), pts in _series(rows, ("architecture",)).items():
        ax.errorbar([r["slots"] for r in pts], [r["p_d"] for r in pts],
                    yerr=[r["std_err"] for r in pts], marker="o", capsize=2,
                    color=_ARCH_COLOR.get(arch), label=arch)
    ax.set_xlabel("beacon slots T")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_se(rows, path: str):
    """Sum spectral efficiency vs SNR, one panel per architecture."""
    archs = sorted({r["architecture"] for r in rows})
    fig, axes = plt.subplots(1, len(archs), figsize=(5.5 * len(archs), 4), squeeze=False)
    for ax, arch in zip(axes[0], archs):
        for (scheme,), pts in _series([r for r in rows if r["architecture"] == arch],
                                      ("scheme",)).items():
            ax.errorbar([r["snr_bbf_db"] for r in pts], [r["r_sum"] for r in pts],
                        yerr=[r["std_err"] for r in pts], marker=".",
                        linestyle=_SCHEME_STYLE.get(scheme, "-"), label=scheme)
        ax.set_title(arch)
        ax.set_xlabel("SNR before beamforming [dB]")
        ax.set_ylabel("sum spectral efficiency [bit/s/Hz]")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_power(rows, path: str):
    """Radiated power and efficiency vs the reference radiated power."""
    fig, (ax_rad, ax_eff) = plt.subplots(1, 2, figsize=(11, 4))
    for (arch, waveform, option), pts in _series(rows, ("architecture", "waveform", "option")).items():
        x = [r["p_rad0_dbm"] for r in pts]
        style = dict(color=_ARCH_COLOR.get(arch), marker="o" if waveform == "SC" else "s",
                     linestyle="-" if option == 1 else "--",
                     label=f"{arch}, {waveform}, option {option}")
        if option == 1:
            ax_rad.plot(x, [r["p_rad_dbm"] for r in pts], **style)
        ax_eff.plot(x, [r["eta_eff"] for r in pts], **style)
    ax_rad.set_xlabel("reference radiated power [dBm]")
    ax_rad.set_ylabel("radiated power [dBm]")
    ax_rad.grid(True, alpha=0.3)
    ax_rad.legend(fontsize=8)
    ax_eff.set_xlabel("reference radiated power [dBm]")
    ax_eff.set_ylabel("transmitter efficiency")
    ax_eff.grid(True, alpha=0.3)
    ax_eff.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
