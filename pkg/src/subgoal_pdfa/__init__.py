"""Sub-goal discovery from demonstrations and PDFA-based task planning."""
from .automaton import Dfa, Pdfa, enumerate_language, export_dot, infer_dfa, learn_pdfa, word_probability
from .pipeline import learn
from .planner import ScheduledEnvironment, Stuck, execute, greedy_plan
from .subgoals import DbscanParams, RadiusPolicy, dbscan, infer_subgoals
from .trace import Demonstration, FeatureSubset, Schema, SubGoal, WorldState, satisfies
from .wordgen import corpus_to_words, demo_to_word

__version__ = "0.1.0"

__all__ = [
    "Dfa", "Pdfa", "enumerate_language", "export_dot", "infer_dfa", "learn_pdfa", "word_probability",
    "learn", "ScheduledEnvironment", "Stuck", "execute", "greedy_plan",
    "DbscanParams", "RadiusPolicy", "dbscan", "infer_subgoals",
    "Demonstration", "FeatureSubset", "Schema", "SubGoal", "WorldState", "satisfies",
    "corpus_to_words", "demo_to_word",
]
