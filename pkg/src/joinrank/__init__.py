"""joinrank: join-aware multi-table retrieval re-ranking.

Given a query, a table corpus and base-retriever candidate scores, select the
best k tables together with an explicit join plan by maximizing query-table
relevance, sub-query coverage and inferred table-table join compatibility
under a connectivity requirement.
"""

from .compatibility import (CompatibilityGraph, build_compatibility_graph,
                            compatibility_score, instance_jaccard, schema_similarity)
from .config import RunConfig, load_config, save_config
from .corpus import (Column, ColumnProfile, GoldConstraintSet, Table, TableCorpus,
                     load_corpus, load_gold_constraints, profile_column,
                     profile_corpus, render_column_text, render_table_text)
from .decompose import (DecompositionCache, DecompositionClient, QueryDecomposition,
                        SubQuery, build_decomposition_prompt, decompose_query,
                        parse_decomposition)
from .embedding import (DeterministicFallbackProvider, EmbeddingProvider,
                        PrecomputedStoreProvider, RemoteServiceProvider, cosine)
from .evaluate import (EvalDataset, EvalQuery, Pipeline, RetrievalReport, evaluate,
                       load_dataset, rerank_one)
from .mip import (JoinPlan, MipModel, RerankInstance, build_model, extract_plan,
                  oracle_solve, solve)
from .relevance import (CandidatePool, RelevanceScores, coarse_scores, fine_scores,
                        load_base_scores)
from .sqlprompt import emit_sql_prompt

__version__ = "0.1.0"

__all__ = [
    "CandidatePool",
    "Column",
    "ColumnProfile",
    "CompatibilityGraph",
    "DecompositionCache",
    "DecompositionClient",
    "DeterministicFallbackProvider",
    "EmbeddingProvider",
    "EvalDataset",
    "EvalQuery",
    "GoldConstraintSet",
    "JoinPlan",
    "MipModel",
    "Pipeline",
    "PrecomputedStoreProvider",
    "QueryDecomposition",
    "RelevanceScores",
    "RemoteServiceProvider",
    "RerankInstance",
    "RetrievalReport",
    "RunConfig",
    "SubQuery",
    "Table",
    "TableCorpus",
    "build_compatibility_graph",
    "build_decomposition_prompt",
    "build_model",
    "coarse_scores",
    "compatibility_score",
    "cosine",
    "decompose_query",
    "emit_sql_prompt",
    "evaluate",
    "extract_plan",
    "fine_scores",
    "instance_jaccard",
    "load_base_scores",
    "load_config",
    "load_corpus",
    "load_dataset",
    "load_gold_constraints",
    "oracle_solve",
    "parse_decomposition",
    "profile_column",
    "profile_corpus",
    "render_column_text",
    "render_table_text",
    "rerank_one",
    "save_config",
    "schema_similarity",
    "solve",
]
