//! In-process mock agent servers speaking the agent wire protocol.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;
use url::Url;

use super::{AgentError, GenerateRequest, GenerateResponse};
use crate::labeler::DiseaseCategory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockBehavior {
    /// Same sentence for every request.
    FixedSentence { text: String },
    /// Sentence looked up by study id; unknown studies get HTTP 404.
    Template { sentences: BTreeMap<String, String> },
    /// HTTP 500 for every request.
    FailAlways,
    /// Answers with [`canned_sentence`] after sleeping.
    DelayMs { ms: u64 },
}

/// A plausible positive finding for each category.
pub fn canned_sentence(category: DiseaseCategory) -> &'static str {
    match category {
        DiseaseCategory::EnlargedCardiomediastinum => "Mediastinal widening is noted.",
        DiseaseCategory::Cardiomegaly => "The heart is enlarged.",
        DiseaseCategory::LungOpacity => "Patchy opacity in the left lower lung.",
        DiseaseCategory::LungLesion => "A small nodule projects over the right apex.",
        DiseaseCategory::Edema => "Mild interstitial edema.",
        DiseaseCategory::Consolidation => "Focal consolidation at the right base.",
        DiseaseCategory::Pneumonia => "Findings suggest pneumonia.",
        DiseaseCategory::Atelectasis => "Bibasilar atelectasis.",
        DiseaseCategory::Pneumothorax => "Small apical pneumothorax.",
        DiseaseCategory::PleuralEffusion => "Small left pleural effusion.",
        DiseaseCategory::PleuralOther => "Biapical pleural thickening.",
        DiseaseCategory::Fracture => "Healed rib fracture.",
        DiseaseCategory::SupportDevices => "A pacemaker is in place.",
        DiseaseCategory::NoFinding => "No acute cardiopulmonary process.",
    }
}

struct MockState {
    category: DiseaseCategory,
    behavior: MockBehavior,
    requests: AtomicUsize,
}

/// A running mock agent. The server stops when the handle is dropped.
pub struct MockAgentHandle {
    addr: SocketAddr,
    category: DiseaseCategory,
    state: Arc<MockState>,
    task: JoinHandle<()>,
}

impl MockAgentHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> Url {
        format!("http://{}", self.addr).parse().expect("socket address forms a URL")
    }

    pub fn category(&self) -> DiseaseCategory {
        self.category
    }

    /// Requests received so far.
    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }

    pub fn shutdown(self) {}
}

impl Drop for MockAgentHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn generate(State(state): State<Arc<MockState>>, Json(request): Json<GenerateRequest>) -> Response {
    state.requests.fetch_add(1, Ordering::SeqCst);
    if request.category != state.category {
        let message = format!("agent serves {}, not {}", state.category, request.category);
        return (StatusCode::BAD_REQUEST, message).into_response();
    }
    let sentence = match &state.behavior {
        MockBehavior::FixedSentence { text } => text.clone(),
        MockBehavior::Template { sentences } => match sentences.get(&request.study_id) {
            Some(text) => text.clone(),
            None => return (StatusCode::NOT_FOUND, "unknown study").into_response(),
        },
        MockBehavior::FailAlways => {
            return (StatusCode::INTERNAL_SERVER_ERROR, "mock failure").into_response();
        }
        MockBehavior::DelayMs { ms } => {
            tokio::time::sleep(Duration::from_millis(*ms)).await;
            canned_sentence(state.category).to_string()
        }
    };
    Json(GenerateResponse { sentence }).into_response()
}

/// Starts a mock agent on an ephemeral localhost port.
pub async fn serve_mock_agent(category: DiseaseCategory, behavior: MockBehavior) -> Result<MockAgentHandle, AgentError> {
    serve_mock_agent_on(SocketAddr::from(([127, 0, 0, 1], 0)), category, behavior).await
}

pub async fn serve_mock_agent_on(
    addr: SocketAddr,
    category: DiseaseCategory,
    behavior: MockBehavior,
) -> Result<MockAgentHandle, AgentError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|e| AgentError::Startup(format!("{addr}: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| AgentError::Startup(e.to_string()))?;
    let state = Arc::new(MockState {
        category,
        behavior,
        requests: AtomicUsize::new(0),
    });
    let app = Router::new()
        .route("/generate", post(generate))
        .with_state(state.clone());
    let task = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::warn!(%e, "mock agent stopped");
        }
    });
    Ok(MockAgentHandle {
        addr,
        category,
        state,
        task,
    })
}
