use crate::gridmap::{Cell, GridMap, RobotState};

/// Longest image side sent to the endpoint.
pub const MAX_IMAGE_SIDE: usize = 1024;

/// Gray level used to mark robot `id`; never collides with map levels.
pub fn robot_gray(id: usize) -> u8 {
    32 + 16 * (id % 6) as u8
}

/// Output image size for a map at the requested scale, shrunk so that
/// neither side exceeds [`MAX_IMAGE_SIDE`].
pub fn image_dims(height: usize, width: usize, scale: u32) -> (usize, usize) {
    let longest = height.max(width);
    let scale = (scale.max(1) as usize).min(MAX_IMAGE_SIDE / longest);
    if scale >= 1 {
        (height * scale, width * scale)
    } else {
        (
            (height * MAX_IMAGE_SIDE / longest).max(1),
            (width * MAX_IMAGE_SIDE / longest).max(1),
        )
    }
}

/// Raw 8-bit grayscale pixels, row-major.
pub fn render_pixels(belief: &GridMap, robots: &[RobotState], scale: u32) -> (usize, usize, Vec<u8>) {
    let (h, w) = (belief.height(), belief.width());
    let (oh, ow) = image_dims(h, w, scale);
    let mut px = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        let row = (y * h / oh) as i32;
        for x in 0..ow {
            let col = (x * w / ow) as i32;
            let c = Cell::new(row, col);
            let level = match robots.iter().find(|r| r.position == c) {
                Some(r) => robot_gray(r.id),
                None => belief.get(c).map(|s| s.gray()).unwrap_or(255),
            };
            px.push(level);
        }
    }
    (oh, ow, px)
}

/// PNG-encoded grayscale map: Unknown white, Free gray, Occupied black,
/// robots as dark marks.
pub fn render_map_image(belief: &GridMap, robots: &[RobotState], scale: u32) -> Vec<u8> {
    let (oh, ow, px) = render_pixels(belief, robots, scale);
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, ow as u32, oh as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        writer.write_image_data(&px).expect("in-memory PNG data");
    }
    out
}
