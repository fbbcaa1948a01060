//! Fixed-palette RGB rasters for the image-grounded variants.

use crate::environments::grid::{Cell, Color, DoorState, GridObservation, ObjectKind, ViewCell, VIEW_SIZE};
use crate::environments::hanoi::{HanoiState, Peg};
use crate::environments::messenger::{MessengerObservation, Role};
use crate::environments::Observation;

pub const HANOI_WIDTH: u32 = 320;
pub const HANOI_HEIGHT: u32 = 240;
pub const TILE: u32 = 32;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [255, 255, 255];
pub const PEG: Rgb = [96, 64, 32];
pub const BASE: Rgb = [64, 48, 32];
pub const GRID_LINE: Rgb = [200, 200, 200];
pub const FLOOR: Rgb = [240, 240, 240];
pub const AGENT: Rgb = [40, 40, 40];
pub const GLYPH: Rgb = [255, 255, 255];
pub const UNSEEN: Rgb = [16, 16, 16];
pub const WALL: Rgb = [128, 128, 128];
pub const DISK_COLORS: [Rgb; 6] = [
    [220, 50, 50],
    [50, 160, 60],
    [50, 90, 220],
    [230, 180, 30],
    [150, 60, 180],
    [30, 170, 170],
];

pub fn role_color(role: Role) -> Rgb {
    match role {
        Role::Message => [50, 90, 220],
        Role::Goal => [50, 160, 60],
        Role::Enemy => [220, 50, 50],
    }
}

pub fn object_color(color: Color) -> Rgb {
    match color {
        Color::Red => [255, 0, 0],
        Color::Green => [0, 255, 0],
        Color::Blue => [0, 0, 255],
        Color::Purple => [112, 39, 195],
        Color::Yellow => [255, 255, 0],
        Color::Grey => [100, 100, 100],
    }
}

/// 5×7 bitmaps, one byte per row, low five bits used (MSB on the left).
fn glyph_rows(c: char) -> [u8; 7] {
    match c {
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        _ => [0x1F; 7],
    }
}

pub struct Canvas {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let pixels = fill.repeat((width * height) as usize);
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: i64, y: i64, color: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = ((y as u32 * self.width + x as u32) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    pub fn rect(&mut self, x: i64, y: i64, w: i64, h: i64, color: Rgb) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.set(xx, yy, color);
            }
        }
    }

    fn outline(&mut self, x: i64, y: i64, w: i64, h: i64, t: i64, color: Rgb) {
        self.rect(x, y, w, t, color);
        self.rect(x, y + h - t, w, t, color);
        self.rect(x, y, t, h, color);
        self.rect(x + w - t, y, t, h, color);
    }

    fn disc(&mut self, cx: i64, cy: i64, r: i64, color: Rgb) {
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r {
                    self.set(x, y, color);
                }
            }
        }
    }

    /// Draws a glyph scaled by `scale`, top-left at (x, y).
    fn glyph(&mut self, c: char, x: i64, y: i64, scale: i64, color: Rgb) {
        for (row, bits) in glyph_rows(c).iter().enumerate() {
            for col in 0..5 {
                if bits & (0x10 >> col) != 0 {
                    self.rect(x + col * scale, y + row as i64 * scale, scale, scale, color);
                }
            }
        }
    }

    /// Glyph centred in the tile at (tx, ty).
    fn tile_glyph(&mut self, c: char, tx: u32, ty: u32, color: Rgb) {
        let scale = 3;
        let x = (tx * TILE) as i64 + (TILE as i64 - 5 * scale) / 2;
        let y = (ty * TILE) as i64 + (TILE as i64 - 7 * scale) / 2;
        self.glyph(c, x, y, scale, color);
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width, self.height);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder.write_header().expect("in-memory PNG header");
            writer
                .write_image_data(&self.pixels)
                .expect("in-memory PNG data");
        }
        out
    }
}

/// X coordinate of each peg's centre line.
pub fn peg_center(peg: Peg) -> i64 {
    (HANOI_WIDTH as i64 / 6) * (2 * peg.index() as i64 + 1)
}

pub const HANOI_BASE_Y: i64 = 200;
pub const DISK_HEIGHT: i64 = 20;

/// Disk width grows linearly with disk id; the largest spans 90 px.
pub fn disk_width(disk: u8, n_disks: usize) -> i64 {
    30 + 60 * (disk as i64 + 1) / n_disks.max(1) as i64
}

pub fn draw_hanoi(state: &HanoiState) -> Canvas {
    let mut c = Canvas::new(HANOI_WIDTH, HANOI_HEIGHT, BACKGROUND);
    c.rect(10, HANOI_BASE_Y, HANOI_WIDTH as i64 - 20, 10, BASE);
    for peg in Peg::ALL {
        let x = peg_center(peg);
        c.rect(x - 3, 40, 6, HANOI_BASE_Y - 40, PEG);
        for (level, &disk) in state.peg(peg).iter().enumerate() {
            let w = disk_width(disk, state.n_disks());
            let y = HANOI_BASE_Y - DISK_HEIGHT * (level as i64 + 1);
            c.rect(
                x - w / 2,
                y + 1,
                w,
                DISK_HEIGHT - 2,
                DISK_COLORS[disk as usize % DISK_COLORS.len()],
            );
        }
    }
    c
}

fn grid_lines(c: &mut Canvas, cols: u32, rows: u32) {
    for x in 0..=cols {
        c.rect((x * TILE) as i64 - 1, 0, 1, (rows * TILE) as i64, GRID_LINE);
    }
    for y in 0..=rows {
        c.rect(0, (y * TILE) as i64 - 1, (cols * TILE) as i64, 1, GRID_LINE);
    }
}

pub fn draw_messenger(obs: &MessengerObservation) -> Canvas {
    let (cols, rows) = (obs.cols as u32, obs.rows as u32);
    let mut c = Canvas::new(cols * TILE, rows * TILE, FLOOR);
    grid_lines(&mut c, cols, rows);
    let tile = |c: &mut Canvas, row: i32, col: i32, fill: Rgb, glyph: char| {
        let (tx, ty) = (col as u32, row as u32);
        c.rect((tx * TILE) as i64 + 1, (ty * TILE) as i64 + 1, TILE as i64 - 2, TILE as i64 - 2, fill);
        c.tile_glyph(glyph, tx, ty, GLYPH);
    };
    for e in &obs.entities {
        tile(&mut c, e.pos.row, e.pos.col, role_color(e.role), super::messenger::role_glyph(e.role));
    }
    let glyph = if obs.has_message { 'P' } else { 'A' };
    tile(&mut c, obs.agent.row, obs.agent.col, AGENT, glyph);
    c
}

fn draw_cell(c: &mut Canvas, tx: u32, ty: u32, cell: Cell) {
    let (x, y, t) = ((tx * TILE) as i64, (ty * TILE) as i64, TILE as i64);
    match cell {
        Cell::Empty => {}
        Cell::Wall => c.rect(x, y, t, t, WALL),
        Cell::Door { color, state } => {
            let rgb = object_color(color);
            match state {
                DoorState::Open => c.outline(x + 2, y + 2, t - 4, t - 4, 2, rgb),
                DoorState::Closed => c.rect(x + 2, y + 2, t - 4, t - 4, rgb),
                DoorState::Locked => {
                    c.rect(x + 2, y + 2, t - 4, t - 4, rgb);
                    c.rect(x + t / 2 - 3, y + t / 2 - 3, 6, 6, UNSEEN);
                }
            }
        }
        Cell::Object(o) => {
            let rgb = object_color(o.color);
            match o.kind {
                ObjectKind::Ball => c.disc(x + t / 2, y + t / 2, t / 3, rgb),
                ObjectKind::Box => c.outline(x + 6, y + 6, t - 12, t - 12, 3, rgb),
                ObjectKind::Key => {
                    c.disc(x + t / 2, y + 10, 5, rgb);
                    c.rect(x + t / 2 - 2, y + 14, 4, t - 20, rgb);
                    c.rect(x + t / 2 + 2, y + t - 10, 5, 3, rgb);
                }
            }
        }
    }
}

/// The visible window, agent at the bottom centre pointing up.
pub fn draw_grid(obs: &GridObservation) -> Canvas {
    let n = VIEW_SIZE as u32;
    let mut c = Canvas::new(n * TILE, n * TILE, FLOOR);
    for row in 0..VIEW_SIZE {
        for col in 0..VIEW_SIZE {
            let (tx, ty) = (col as u32, row as u32);
            match obs.view[row][col] {
                ViewCell::Unseen => c.rect(
                    (tx * TILE) as i64,
                    (ty * TILE) as i64,
                    TILE as i64,
                    TILE as i64,
                    UNSEEN,
                ),
                ViewCell::Visible(cell) => draw_cell(&mut c, tx, ty, cell),
            }
        }
    }
    grid_lines(&mut c, n, n);
    let (ax, ay) = (((n / 2) * TILE) as i64, ((n - 1) * TILE) as i64);
    for dy in 0..20i64 {
        let half = dy / 2;
        c.rect(ax + 16 - half, ay + 6 + dy, 2 * half + 1, 1, AGENT);
    }
    c
}

pub fn draw(obs: &Observation) -> Canvas {
    match obs {
        Observation::Hanoi(s) => draw_hanoi(s),
        Observation::Messenger(m) => draw_messenger(m),
        Observation::Grid(g) => draw_grid(g),
    }
}

/// PNG bytes for `obs`.
pub fn render_image(obs: &Observation) -> Vec<u8> {
    draw(obs).to_png()
}
