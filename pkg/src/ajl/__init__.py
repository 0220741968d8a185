"""ajl: an instrumented in-memory evaluator for acyclic natural-join queries."""

from .aggregates import (
    COUNTING,
    MIN_PLUS,
    SUM_PRODUCT,
    AggregateSpec,
    AnnotatedRelation,
    Semiring,
    oracle_aggregate,
    ya_aggregate,
    zero_ma_aggregate,
)
from .csvio import load_csv, write_relation
from .datamodel import Atom, OpStats, Query, QueryError, Relation, SchemaError, natural_join, oracle_join, semijoin
from .generate import GenConfig, gen_instance, generate
from .jointree import (
    AcyclicityError,
    JoinTree,
    build_join_tree,
    enumerate_join_trees,
    is_acyclic,
    monotone_orders,
)
from .predicate_transfer import BloomFilter, BloomParams, predicate_transfer, pt, rpt
from .query_parser import QuerySyntaxError, parse_query
from .runner import STRATEGIES, BenchConfig, RunConfig, bench, execute, run
from .sql import emit_sql_script
from .yannakakis import full_reduce, ya_classic, ya_plus, ya_two_phase
from .zero_overhead import hash_join_plan, left_deep_plan, nested_ya, right_deep_plan, ttj

__version__ = "0.1.0"
