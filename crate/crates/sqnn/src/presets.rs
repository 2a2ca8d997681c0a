//! Shipped experiment configurations, one per model name.

pub const NAMES: &[&str] = &[
    "4qb_3blk",
    "9qb_3blk",
    "16qb_3blk",
    "4qb_6blk",
    "9qb_6blk",
    "16qb_6blk",
    "16qb_sqnn",
    "36qb_sqnn",
    "64qb_sqnn",
    "16qb_uneven_sqnn",
];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "4qb_3blk" => include_str!("../configs/4qb_3blk.toml"),
        "9qb_3blk" => include_str!("../configs/9qb_3blk.toml"),
        "16qb_3blk" => include_str!("../configs/16qb_3blk.toml"),
        "4qb_6blk" => include_str!("../configs/4qb_6blk.toml"),
        "9qb_6blk" => include_str!("../configs/9qb_6blk.toml"),
        "16qb_6blk" => include_str!("../configs/16qb_6blk.toml"),
        "16qb_sqnn" => include_str!("../configs/16qb_sqnn.toml"),
        "36qb_sqnn" => include_str!("../configs/36qb_sqnn.toml"),
        "64qb_sqnn" => include_str!("../configs/64qb_sqnn.toml"),
        "16qb_uneven_sqnn" => include_str!("../configs/16qb_uneven_sqnn.toml"),
        _ => return None,
    })
}
