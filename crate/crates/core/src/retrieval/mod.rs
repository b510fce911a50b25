//! Nearest-neighbor and CSLS retrieval, translation accuracy, word
//! similarity correlation and neighborhood listings.

mod csls;
mod knn;
mod neighbors;
mod wordsim;

pub use csls::{
    csls_scores, evaluate_p1, translate_topk, EvaluationReport, Prediction, Ranked, RetrievalCriterion,
    RetrievalOptions, Translator, DEFAULT_BLOCK_SIZE, DEFAULT_CSLS_KNN,
};
pub(crate) use knn::block_map;
pub use knn::{knn_mean_dots, knn_mean_similarity, top_k_desc};
pub use neighbors::{nearest_neighbors, neighborhood_report, Neighbor, NeighborhoodReport};
pub use wordsim::{
    average_ranks, parse_similarity_dataset, read_similarity_file, spearman, spearman_wordsim, SimilarityDataset,
    SimilarityPair, WordSimResult,
};
