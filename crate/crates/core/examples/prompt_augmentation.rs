//! What a large-model request carries when the small model declines.
//!
//!     cargo run --example prompt_augmentation

use kcm::collab::build_prompt;

fn main() {
    let labels: Vec<String> = ["cat", "dog", "fox", "owl"].iter().map(|s| s.to_string()).collect();
    let small_distribution = [0.15, 0.55, 0.25, 0.05];
    let prompt = build_prompt(7, &small_distribution, 0.55, &labels, 2);
    println!("{}", prompt.template_text);
    println!("{}", serde_json::to_string_pretty(&prompt).unwrap());
}
