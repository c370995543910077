const FENCE: &str = "```";

/// Returns the interior of the longest fenced code block, or the whole
/// response when it has no fences. The info string after an opening fence
/// (`java`, `Java`, ...) is dropped. An unclosed final fence runs to the end.
pub fn extract_code(raw_response: &str) -> String {
    let mut blocks: Vec<&str> = Vec::new();
    let mut rest = raw_response;
    while let Some(open) = rest.find(FENCE) {
        let after_open = &rest[open + FENCE.len()..];
        let (body, next) = match after_open.find(FENCE) {
            Some(close) => (&after_open[..close], &after_open[close + FENCE.len()..]),
            None => (after_open, ""),
        };
        blocks.push(strip_info_string(body));
        rest = next;
    }
    // first of the longest wins on ties
    let mut best: Option<&str> = None;
    for block in blocks {
        if best.is_none_or(|b| block.chars().count() > b.chars().count()) {
            best = Some(block);
        }
    }
    match best {
        Some(block) => block.to_string(),
        None => raw_response.to_string(),
    }
}

fn strip_info_string(body: &str) -> &str {
    let body = match body.find('\n') {
        Some(nl) if !body[..nl].trim().contains(char::is_whitespace) => &body[nl + 1..],
        _ => body,
    };
    body.strip_suffix('\n').map(|b| b.strip_suffix('\r').unwrap_or(b)).unwrap_or(body)
}
