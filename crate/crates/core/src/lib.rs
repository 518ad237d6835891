pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod gateway;
pub mod metrics;
pub mod model;
pub mod paraphrase;
pub mod pipeline;
pub mod replace;
pub mod splitter;
pub mod text;
