//! Wire format: JSON text messages for control, little-endian binary frames
//! for geometry.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    LoadMesh {
        obj: String,
    },
    SetStyle {
        style: String,
        /// Style mesh for `mesh`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        obj: Option<String>,
        /// Unit directions for `polytope`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        directions: Option<Vec<[f64; 3]>>,
        /// Replacement canvas for `normcap`; the current canvas otherwise.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image: Option<ImagePatch>,
    },
    SetParams {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regularization: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dynamic_targets: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iterations: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        crease_threshold: Option<f64>,
    },
    PaintNormcap(ImagePatch),
    Start,
    Pause,
    Reset,
    Export,
}

impl ClientMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::LoadMesh { .. } => "load_mesh",
            Self::SetStyle { .. } => "set_style",
            Self::SetParams { .. } => "set_params",
            Self::PaintNormcap(_) => "paint_normcap",
            Self::Start => "start",
            Self::Pause => "pause",
            Self::Reset => "reset",
            Self::Export => "export",
        }
    }
}

/// A rectangle of RGB pixels, base64 encoded, row-major from the top-left.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct ImagePatch {
    #[serde(default)]
    pub x: usize,
    #[serde(default)]
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub pixels: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadMesh,
    BadStyle,
    BadParams,
    NoSession,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionCreated {
        session: String,
        vertices: usize,
        faces: usize,
    },
    Ack {
        request: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
    Exported {
        obj: String,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Self::Error {
            code,
            message: message.into(),
        }
    }

    pub fn ack(request: &str) -> Self {
        Self::Ack {
            request: request.to_string(),
        }
    }
}

/// Parses a text message. Malformed requests become the error reply for
/// their request type.
pub fn parse_client_message(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(ErrorCode::BadParams, format!("invalid JSON: {e}")))?;
    let kind = value.get("type").and_then(|t| t.as_str()).unwrap_or("").to_string();
    let code = match kind.as_str() {
        "load_mesh" => ErrorCode::BadMesh,
        "set_style" => ErrorCode::BadStyle,
        "set_params" | "paint_normcap" | "start" | "pause" | "reset" | "export" => {
            ErrorCode::BadParams
        }
        "" => {
            return Err(ServerMessage::error(ErrorCode::BadParams, "message has no type"));
        }
        other => {
            return Err(ServerMessage::error(
                ErrorCode::BadParams,
                format!("unknown message type `{other}`"),
            ));
        }
    };
    serde_json::from_value(value).map_err(|e| ServerMessage::error(code, format!("{kind}: {e}")))
}

/// One streamed geometry update: `[u32 iteration][f32 energy][f32 × 3|V|]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub iteration: u32,
    pub energy: f32,
    /// Flat `x, y, z` per vertex.
    pub positions: Vec<f32>,
}

pub const FRAME_HEADER_BYTES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameError {
    TooShort(usize),
    Misaligned(usize),
}

impl std::fmt::Display for FrameError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::TooShort(n) => write!(f, "frame of {n} bytes is shorter than its header"),
            Self::Misaligned(n) => {
                write!(f, "frame payload of {n} bytes is not a whole number of vertices")
            }
        }
    }
}

impl std::error::Error for FrameError {}

impl Frame {
    pub fn vertex_count(&self) -> usize {
        self.positions.len() / 3
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_BYTES + 4 * self.positions.len());
        out.extend_from_slice(&self.iteration.to_le_bytes());
        out.extend_from_slice(&self.energy.to_le_bytes());
        for p in &self.positions {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < FRAME_HEADER_BYTES {
            return Err(FrameError::TooShort(bytes.len()));
        }
        let payload = &bytes[FRAME_HEADER_BYTES..];
        if !payload.len().is_multiple_of(12) {
            return Err(FrameError::Misaligned(payload.len()));
        }
        let word = |b: &[u8]| [b[0], b[1], b[2], b[3]];
        Ok(Self {
            iteration: u32::from_le_bytes(word(&bytes[0..4])),
            energy: f32::from_le_bytes(word(&bytes[4..8])),
            positions: payload.chunks_exact(4).map(|c| f32::from_le_bytes(word(c))).collect(),
        })
    }
}
