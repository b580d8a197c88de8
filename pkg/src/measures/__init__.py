"""
Inverse measure: CDF intervals, suffix sets, atoms, gap scans and designated atoms.
"""

from .inverse_measure import (
    IntervalRecord,
    SuffixSets,
    Atom,
    AtomList,
    SiblingGaps,
    LetterGap,
    GapScanReport,
    DesignatedAtom,
    DesignatedArrays,
    interval_bounds,
    interval_table,
    suffix_sets,
    sibling_gaps,
    atoms,
    gap_scan,
    designated_atoms,
    designated_atom,
)

__all__ = [
    'IntervalRecord', 'SuffixSets', 'Atom', 'AtomList', 'SiblingGaps', 'LetterGap', 'GapScanReport',
    'DesignatedAtom', 'DesignatedArrays',
    'interval_bounds', 'interval_table', 'suffix_sets', 'sibling_gaps', 'atoms', 'gap_scan',
    'designated_atoms', 'designated_atom',
]
