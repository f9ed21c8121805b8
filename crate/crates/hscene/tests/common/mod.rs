#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use hscene::backends::{BackendClient, MockScript, RetryPolicy};

pub const TOY: &str = include_str!("../../../core/tests/fixtures/toy.json");
pub const BEDROOM: &str = include_str!("../../../core/tests/fixtures/bedroom.json");

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn office_script() -> MockScript {
    MockScript::load(&fixture("office_mock.json")).expect("office script")
}

pub fn fast_policy() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        backoff: Duration::from_millis(10),
        deadline: Duration::from_secs(5),
        max_in_flight: 4,
    }
}

pub fn client(url: &str) -> BackendClient {
    BackendClient::new(url, None, fast_policy()).expect("client")
}

/// Write a blank `w`×`h` PNG.
pub fn write_png(path: &Path, w: u32, h: u32) {
    image::RgbImage::from_pixel(w, h, image::Rgb([200, 190, 180]))
        .save(path)
        .expect("png");
}
