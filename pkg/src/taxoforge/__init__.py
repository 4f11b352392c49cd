"""Taxonomy induction from pairwise parenthood scores.

Score every ordered term pair with a parenthood log-odds, then decode the
maximum spanning arborescence to get a tree. The package also covers
scorer training, definition re-ranking, dataset handling, and ancestor
P/R/F1 evaluation; the ``taxoforge`` command wires it all together.
"""
from .dataset import (
    DatasetSplit,
    SyntheticCorpus,
    SyntheticSpec,
    check_profile,
    load_corpus,
    load_dataset,
    load_manifest,
    make_synthetic_corpus,
    split_counts,
    split_dataset,
    write_corpus,
    write_dataset,
)
from .definitions import (
    DefinitionRecord,
    DefinitionStore,
    EmbeddingTable,
    avg_embedding,
    build_context,
    build_pair_context,
    bundled_stopwords,
    canonicalize_token,
    cosine,
    dump_definitions,
    dump_embeddings,
    load_definitions,
    load_embeddings,
    load_stopwords,
    rerank_definitions,
    rerank_store,
    term_set_reference_vector,
    tokenize,
)
from .evaluation import (
    EvalReport,
    TreeScore,
    aggregate_restarts,
    ancestor_prf,
    dump_report,
    evaluate_set,
    harmonic_macro_f1,
    load_report,
)
from .scoring import (
    FEATURE_NAMES,
    AllNegatives,
    FeatureScorerModel,
    PairExample,
    SampledNegatives,
    featurize,
    generate_training_pairs,
    load_external_matrix,
    load_model,
    logistic_loss_grad,
    make_hypothesis,
    oracle_scores,
    predict_matrix,
    read_pair_examples,
    save_model,
    stores_by_tree,
    train_feature_scorer,
    write_pair_examples,
)
from .solver import (
    BestRoot,
    GivenRoot,
    VirtualRoot,
    ancestor_pairs,
    brute_force_arborescence,
    chu_liu_edmonds,
    induce,
    total_score,
)
from .types import (
    ABSENT,
    AncestorSet,
    EdgeScoreMatrix,
    Taxonomy,
    TermSet,
    ValidationError,
    canonicalize_term,
    dump_json,
    dump_score_matrix,
    dump_taxonomy,
    load_score_matrix,
    load_taxonomy,
    parse_json,
)

__version__ = "0.1.0"
