/// One named tensor row: dimensions follow the (out, in) convention of the
/// breakdown tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: u64,
}

impl ReportEntry {
    pub fn new(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let count = shape.iter().product::<usize>() as u64;
        Self {
            name: name.into(),
            shape,
            count,
        }
    }

    pub fn memory_mb(&self) -> f64 {
        self.count as f64 * 4.0 / (1024.0 * 1024.0)
    }

    pub fn shape_string(&self) -> String {
        match self.shape.len() {
            1 => format!("({},)", self.shape[0]),
            _ => format!(
                "({})",
                self.shape
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

/// Full per-layer parameter breakdown for one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    /// Rows for the embedding, then each layer in order, then the final
    /// norm and head bias.
    pub entries: Vec<ReportEntry>,
    pub num_layers: usize,
    pub total: u64,
}

impl ParamReport {
    /// Rows of layer 0 with the layer index replaced by `N`: the shared
    /// block shape when every layer is identical (always true here).
    pub fn layer_block(&self) -> Vec<ReportEntry> {
        self.entries
            .iter()
            .filter(|e| e.name.starts_with("layers.0."))
            .map(|e| ReportEntry {
                name: e.name.replacen("layers.0.", "layers.N.", 1),
                shape: e.shape.clone(),
                count: e.count,
            })
            .collect()
    }

    pub fn non_layer_entries(&self) -> (Vec<ReportEntry>, Vec<ReportEntry>) {
        let head: Vec<ReportEntry> = self
            .entries
            .iter()
            .take_while(|e| !e.name.starts_with("layers."))
            .cloned()
            .collect();
        let tail: Vec<ReportEntry> = self
            .entries
            .iter()
            .skip_while(|e| !e.name.starts_with("layers."))
            .skip_while(|e| e.name.starts_with("layers."))
            .cloned()
            .collect();
        (head, tail)
    }

    pub fn total_memory_mb(&self) -> f64 {
        self.total as f64 * 4.0 / (1024.0 * 1024.0)
    }
}

pub fn group_thousands(value: u64) -> String {
    let digits = value.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn memory_cell(mb: f64) -> String {
    if mb < 0.005 {
        "<0.01".to_string()
    } else {
        format!("{mb:.2}")
    }
}

/// Aligned text table in the layer-by-layer breakdown layout: model-level
/// rows, one representative `layers.N.` block, model tail, and the total.
pub fn render_appendix_table(report: &ParamReport) -> String {
    let (head, tail) = report.non_layer_entries();
    let block = report.layer_block();

    let mut rows: Vec<(String, String, String, String)> = Vec::new();
    let push = |rows: &mut Vec<(String, String, String, String)>, e: &ReportEntry| {
        rows.push((
            e.name.clone(),
            e.shape_string(),
            group_thousands(e.count),
            memory_cell(e.memory_mb()),
        ));
    };
    for e in &head {
        push(&mut rows, e);
    }
    for e in &block {
        push(&mut rows, e);
    }
    for e in &tail {
        push(&mut rows, e);
    }
    rows.push((
        "Total".into(),
        "-".into(),
        group_thousands(report.total),
        format!("{:.2} MB", report.total_memory_mb()),
    ));

    let widths = rows.iter().fold([0usize; 4], |mut w, r| {
        w[0] = w[0].max(r.0.len());
        w[1] = w[1].max(r.1.len());
        w[2] = w[2].max(r.2.len());
        w[3] = w[3].max(r.3.len());
        w
    });
    let header = [
        "Model Layer Name",
        "Dimensions",
        "Parameter Count",
        "Memory (MB)",
    ];
    let widths = [
        widths[0].max(header[0].len()),
        widths[1].max(header[1].len()),
        widths[2].max(header[2].len()),
        widths[3].max(header[3].len()),
    ];

    let mut out = String::new();
    out.push_str(&format!(
        "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}\n",
        header[0],
        header[1],
        header[2],
        header[3],
        w0 = widths[0],
        w1 = widths[1],
        w2 = widths[2],
        w3 = widths[3],
    ));
    let block_note = format!(
        "(transformer layer block; structure repeats for {} layers)",
        report.num_layers
    );
    for (i, (name, shape, count, mem)) in rows.iter().enumerate() {
        if i == head.len() {
            out.push_str(&block_note);
            out.push('\n');
        }
        if i == head.len() + block.len() && !block.is_empty() {
            out.push_str("(end of transformer layer block)\n");
        }
        out.push_str(&format!(
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}\n",
            name,
            shape,
            count,
            mem,
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
        ));
    }
    out
}

/// Machine-readable form: one row per actual tensor (every layer index
/// expanded), `name,shape,count,memory_mb`.
pub fn render_csv(report: &ParamReport) -> String {
    let mut out = String::from("name,shape,params,memory_mb\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            e.name,
            e.shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            e.count,
            e.memory_mb()
        ));
    }
    out.push_str(&format!(
        "total,,{},{:.6}\n",
        report.total,
        report.total_memory_mb()
    ));
    out
}
