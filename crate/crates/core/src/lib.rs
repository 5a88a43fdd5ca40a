pub mod eval;
pub mod graph;
pub mod grena;
pub mod llm;
pub mod oracles;
pub mod pipeline;
pub mod rag;
pub mod reasoning;
pub mod render;
pub mod router;
pub mod subgraph;
