"""Adverse drug reaction screening by prescription-event monitoring.

Patients' medical events in a window before and after their first
prescription are turned into binary feature matrices, summed over blocks of
patients, and compared event by event with Student's t-test.
"""

from .featmat import (EventUniverse, FeatureMatrix, GroupedMatrix, Mode, WindowConfig,
                      build_feature_matrices, build_universe, column_counts, group_matrix)
from .ingest import (EventRecord, PrescriptionRecord, build_exposure_index, load_medical,
                     load_therapy)
from .pipeline import DetectConfig, detect
from .readcode import Readcode, TermDictionary, load_dictionary, parse_readcode, rollup
from .signals import SignalReport, filter_prefix, rank_by_p, rank_by_r1, write_report
from .stats import EventStats, TestResult, per_event_tests, ratios, students_t, two_sided_p
from .synth import EvalResult, SynthConfig, evaluate, generate_cohort

__version__ = "0.1.0"
