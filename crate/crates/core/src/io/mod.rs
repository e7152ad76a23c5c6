//! Reading and writing sequences, trajectories and synthetic data.

pub mod dataset;
pub mod render;
pub mod synth;
pub mod trajectory;

pub use dataset::{load_dirs, load_gray, load_kitti, save_gray, SequenceSource};
pub use render::{render_sequence, render_sprites, RenderOptions};
pub use synth::{build_sprite_scene, generate_tracks, SpriteLayout, SyntheticScene, SyntheticTracks};
pub use trajectory::{read_timestamps, read_trajectory, write_timestamps, write_trajectory};
