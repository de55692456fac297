//! Seeded generators for the two temporal benchmark families.

mod coauthor;
mod tree_cycles;

pub use coauthor::{generate_coauthor, load_coauthor_file, relabel_by_percentile, CoauthorConfig};
pub use tree_cycles::{flip_class, generate_tree_cycles, mutate_within_class, random_tree, TreeCyclesConfig};
