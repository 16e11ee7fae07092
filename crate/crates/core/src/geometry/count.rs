use super::BinaryImage;

/// Result of [`count_rectangles`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RectCount {
    /// Components that are exactly `rect_w`×`rect_h` filled boxes.
    pub count: usize,
    /// Every foreground pixel belongs to such a component.
    pub clean: bool,
}

impl RectCount {
    /// The image holds exactly `k` rectangles and nothing else.
    pub fn is_exactly(&self, k: usize) -> bool {
        self.clean && self.count == k
    }
}

/// Count filled `rect_w`×`rect_h` boxes among the 4-connected foreground
/// components of the image binarized at 0.5.
pub fn count_rectangles(img: &BinaryImage, rect_w: usize, rect_h: usize) -> RectCount {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut count = 0;
    let mut clean = true;

    for start in 0..w * h {
        if seen[start] || !img.is_foreground(start % w, start / w) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            let neighbours = [
                (x > 0).then(|| p - 1),
                (x + 1 < w).then(|| p + 1),
                (y > 0).then(|| p - w),
                (y + 1 < h).then(|| p + w),
            ];
            for q in neighbours.into_iter().flatten() {
                if !seen[q] && img.is_foreground(q % w, q / w) {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
        if bw == rect_w && bh == rect_h && area == bw * bh {
            count += 1;
        } else {
            clean = false;
        }
    }
    RectCount { count, clean }
}
